#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gwm {

/// A non-empty rectangular grid of symbols (single characters).
/// Cells are stored row-major; indices are 0-based.
class Picture {
public:
    Picture(int rows, int cols, char fill = 'a');
    Picture(int rows, int cols, std::vector<char> cells);

    /// Builds from equal-length strings, one per row.
    static Picture from_rows(const std::vector<std::string>& rows);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int cell_count() const { return rows_ * cols_; }

    char at(int r, int c) const { return cells_[static_cast<std::size_t>(r) * cols_ + c]; }
    char& at(int r, int c) { return cells_[static_cast<std::size_t>(r) * cols_ + c]; }
    const std::vector<char>& cells() const { return cells_; }

    std::string row(int r) const;

    /// Canonical string key, usable for hashing/dedup across sizes.
    std::string key() const;

    bool operator==(const Picture& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && cells_ == other.cells_;
    }

private:
    int rows_;
    int cols_;
    std::vector<char> cells_;
};

Picture transpose(const Picture& p);

/// Text form: a "rows cols" header line, then one line per row.
void save_picture(const Picture& p, std::ostream& out);
void save_picture_file(const Picture& p, const std::string& path);
Picture load_picture(std::istream& in);
Picture load_picture_file(const std::string& path);

}  // namespace gwm
