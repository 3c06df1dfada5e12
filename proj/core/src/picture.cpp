#include "gwm/picture.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gwm {

Picture::Picture(int rows, int cols, char fill)
    : rows_(rows), cols_(cols), cells_(static_cast<std::size_t>(rows) * cols, fill) {
    if (rows < 1 || cols < 1)
        throw std::invalid_argument("Picture: dimensions must be at least 1x1");
}

Picture::Picture(int rows, int cols, std::vector<char> cells)
    : rows_(rows), cols_(cols), cells_(std::move(cells)) {
    if (rows < 1 || cols < 1)
        throw std::invalid_argument("Picture: dimensions must be at least 1x1");
    if (cells_.size() != static_cast<std::size_t>(rows) * cols)
        throw std::invalid_argument("Picture: cell count does not match dimensions");
}

Picture Picture::from_rows(const std::vector<std::string>& rows) {
    if (rows.empty()) throw std::invalid_argument("Picture: no rows");
    const int m = static_cast<int>(rows.size());
    const int n = static_cast<int>(rows[0].size());
    std::vector<char> cells;
    cells.reserve(static_cast<std::size_t>(m) * n);
    for (const auto& r : rows) {
        if (static_cast<int>(r.size()) != n)
            throw std::invalid_argument("Picture: ragged rows");
        cells.insert(cells.end(), r.begin(), r.end());
    }
    return Picture(m, n, std::move(cells));
}

std::string Picture::row(int r) const {
    return std::string(cells_.begin() + static_cast<std::size_t>(r) * cols_,
                       cells_.begin() + static_cast<std::size_t>(r + 1) * cols_);
}

std::string Picture::key() const {
    std::string k = std::to_string(rows_) + "x" + std::to_string(cols_) + ":";
    k.append(cells_.begin(), cells_.end());
    return k;
}

Picture transpose(const Picture& p) {
    Picture t(p.cols(), p.rows());
    for (int r = 0; r < p.rows(); ++r)
        for (int c = 0; c < p.cols(); ++c) t.at(c, r) = p.at(r, c);
    return t;
}

void save_picture(const Picture& p, std::ostream& out) {
    out << p.rows() << ' ' << p.cols() << '\n';
    for (int r = 0; r < p.rows(); ++r) out << p.row(r) << '\n';
}

void save_picture_file(const Picture& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    save_picture(p, out);
}

Picture load_picture(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("picture file: empty input");
    std::istringstream hs(header);
    int m = 0, n = 0;
    if (!(hs >> m >> n) || m < 1 || n < 1)
        throw std::runtime_error("picture file: expected a 'rows cols' header line");
    std::vector<std::string> rows;
    std::string line;
    for (int r = 0; r < m; ++r) {
        if (!std::getline(in, line))
            throw std::runtime_error("picture file: expected " + std::to_string(m) + " rows");
        if (static_cast<int>(line.size()) != n)
            throw std::runtime_error("picture file: row " + std::to_string(r + 1) + " has length " +
                                     std::to_string(line.size()) + ", expected " + std::to_string(n));
        rows.push_back(line);
    }
    return Picture::from_rows(rows);
}

Picture load_picture_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return load_picture(in);
}

}  // namespace gwm
