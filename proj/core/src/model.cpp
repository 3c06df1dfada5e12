#include "gwm/model.hpp"

#include "gwm/rng.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace gwm {

using nlohmann::json;

const char* side_name(Side s) {
    switch (s) {
        case Side::West: return "west";
        case Side::North: return "north";
        case Side::East: return "east";
        case Side::South: return "south";
    }
    return "?";
}

int GwmModel::symbol_index(char symbol) const {
    for (std::size_t i = 0; i < alphabet.size(); ++i)
        if (alphabet[i] == symbol) return static_cast<int>(i);
    return -1;
}

void GwmModel::validate() const {
    if (dim < 1) throw std::invalid_argument("GwmModel: dim must be at least 1");
    if (alphabet.empty()) throw std::invalid_argument("GwmModel: empty alphabet");
    if (std::set<char>(alphabet.begin(), alphabet.end()).size() != alphabet.size())
        throw std::invalid_argument("GwmModel: duplicate alphabet symbol");
    if (tensors.size() != alphabet.size())
        throw std::invalid_argument("GwmModel: tensor count does not match alphabet");
    const std::size_t d = static_cast<std::size_t>(dim);
    const std::vector<std::size_t> t_shape = {d, d, d, d};
    for (std::size_t i = 0; i < tensors.size(); ++i)
        if (tensors[i].shape() != t_shape)
            throw std::invalid_argument(std::string("GwmModel: tensor for symbol '") +
                                        alphabet[i] + "' has the wrong shape");
    for (Side s : kSides)
        if (border(s).shape() != std::vector<std::size_t>{d})
            throw std::invalid_argument(std::string("GwmModel: border vector ") + side_name(s) +
                                        " has the wrong shape");
}

GradientAccumulator GradientAccumulator::zeros_like(const GwmModel& model) {
    GradientAccumulator g;
    g.tensors.reserve(model.tensors.size());
    for (const auto& t : model.tensors) g.tensors.push_back(DenseTensor::zeros_like(t));
    for (Side s : kSides)
        g.border(s) = DenseTensor::zeros_like(model.border(s));
    return g;
}

void GradientAccumulator::scale(double factor) {
    for (auto& t : tensors) t.scale(factor);
    for (auto& b : borders) b.scale(factor);
}

void GradientAccumulator::add_scaled(const GradientAccumulator& other, double factor) {
    for (std::size_t i = 0; i < tensors.size(); ++i) tensors[i].add_scaled(other.tensors[i], factor);
    for (std::size_t i = 0; i < borders.size(); ++i) borders[i].add_scaled(other.borders[i], factor);
}

double GradientAccumulator::squared_norm() const {
    double s = 0.0;
    for (const auto& t : tensors) s += t.squared_norm();
    for (const auto& b : borders) s += b.squared_norm();
    return s;
}

GwmModel random_init(int dim, std::vector<char> alphabet, double std, std::uint64_t seed) {
    if (dim < 1) throw std::invalid_argument("random_init: dim must be at least 1");
    if (!(std > 0.0)) throw std::invalid_argument("random_init: std must be positive");
    if (alphabet.empty()) throw std::invalid_argument("random_init: empty alphabet");

    GwmModel m;
    m.dim = dim;
    m.alphabet = std::move(alphabet);
    const std::size_t d = static_cast<std::size_t>(dim);

    Rng rng(seed);
    auto fill = [&](DenseTensor& t) {
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.normal(0.0, std);
    };
    for (std::size_t s = 0; s < m.alphabet.size(); ++s) {
        m.tensors.emplace_back(std::vector<std::size_t>{d, d, d, d});
        fill(m.tensors.back());
    }
    for (Side s : kSides) {
        m.border(s) = DenseTensor(std::vector<std::size_t>{d});
        fill(m.border(s));
    }
    m.validate();
    return m;
}

namespace {

// Inverse with an explicit solvability check; throws on singular input.
DenseTensor invert_basis(const DenseTensor& basis, int dim) {
    const std::size_t d = static_cast<std::size_t>(dim);
    if (basis.shape() != std::vector<std::size_t>{d, d})
        throw std::invalid_argument("change_of_basis: basis must be a d x d matrix");

    using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const Mat> P(basis.data(), dim, dim);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(P);
    Eigen::MatrixXd inv = lu.solve(Eigen::MatrixXd::Identity(dim, dim));
    const double residual = (P * inv - Eigen::MatrixXd::Identity(dim, dim)).cwiseAbs().maxCoeff();
    if (!std::isfinite(residual) || residual >= 1e-8)
        throw std::runtime_error("change_of_basis: basis matrix is singular (identity residual " +
                                 std::to_string(residual) + ")");

    DenseTensor out(std::vector<std::size_t>{d, d});
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) out[static_cast<std::size_t>(r) * d + c] = inv(r, c);
    return out;
}

}  // namespace

GwmModel change_of_basis(const GwmModel& model, const DenseTensor& basis) {
    model.validate();
    const DenseTensor inv = invert_basis(basis, model.dim);

    GwmModel out;
    out.dim = model.dim;
    out.alphabet = model.alphabet;
    out.tensors.reserve(model.tensors.size());
    for (const auto& T : model.tensors) {
        // east, south: multiply by the basis, new index on the column side
        DenseTensor t = contract(T, basis, {{2, 0}});   // (w,n,s,e')
        t = contract(t, basis, {{2, 0}});               // (w,n,e',s')
        // west, north: multiply by the inverse, new index on the row side
        t = contract(inv, t, {{1, 0}});                 // (w',n,e',s')
        t = contract(inv, t, {{1, 1}});                 // (n',w',e',s')
        out.tensors.push_back(permute(t, {1, 0, 2, 3}));
    }
    // Boundary contractions stay unchanged: west/north borders absorb the
    // transpose of the basis, east/south borders its inverse.
    out.border(Side::West) = contract(basis, model.border(Side::West), {{0, 0}});
    out.border(Side::North) = contract(basis, model.border(Side::North), {{0, 0}});
    out.border(Side::East) = contract(inv, model.border(Side::East), {{1, 0}});
    out.border(Side::South) = contract(inv, model.border(Side::South), {{1, 0}});
    return out;
}

namespace {

json tensor_values(const DenseTensor& t) {
    json arr = json::array();
    for (std::size_t i = 0; i < t.size(); ++i) arr.push_back(t[i]);
    return arr;
}

std::vector<double> parse_real_list(const json& j, const std::string& what, std::size_t expected) {
    if (!j.is_array() || j.size() != expected)
        throw std::runtime_error("model file: " + what + " must be a list of " +
                                 std::to_string(expected) + " reals");
    std::vector<double> out;
    out.reserve(expected);
    for (const auto& v : j) {
        if (!v.is_number()) throw std::runtime_error("model file: " + what + " holds a non-number");
        out.push_back(v.get<double>());
    }
    return out;
}

}  // namespace

void save_model(const GwmModel& model, std::ostream& out) {
    model.validate();
    json j;
    j["dim"] = model.dim;
    json alpha = json::array();
    for (char c : model.alphabet) alpha.push_back(std::string(1, c));
    j["alphabet"] = alpha;
    json tensors = json::object();
    for (std::size_t s = 0; s < model.alphabet.size(); ++s)
        tensors[std::string(1, model.alphabet[s])] = tensor_values(model.tensors[s]);
    j["tensors"] = tensors;
    json borders = json::object();
    for (Side s : kSides) borders[side_name(s)] = tensor_values(model.border(s));
    j["borders"] = borders;
    out << j.dump(2) << '\n';
}

GwmModel load_model(std::istream& in) {
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("model file: ") + e.what());
    }
    if (!j.is_object() || !j.contains("dim") || !j.contains("alphabet") ||
        !j.contains("tensors") || !j.contains("borders"))
        throw std::runtime_error("model file: expected fields dim, alphabet, tensors, borders");
    if (!j["dim"].is_number_integer() || j["dim"].get<int>() < 1)
        throw std::runtime_error("model file: dim must be a positive integer");

    GwmModel m;
    m.dim = j["dim"].get<int>();
    const std::size_t d = static_cast<std::size_t>(m.dim);

    for (const auto& sym : j["alphabet"]) {
        if (!sym.is_string() || sym.get<std::string>().size() != 1)
            throw std::runtime_error("model file: alphabet entries must be single characters");
        m.alphabet.push_back(sym.get<std::string>()[0]);
    }

    for (char c : m.alphabet) {
        const std::string key(1, c);
        if (!j["tensors"].contains(key))
            throw std::runtime_error("model file: missing tensor for symbol '" + key + "'");
        m.tensors.emplace_back(std::vector<std::size_t>{d, d, d, d},
                               parse_real_list(j["tensors"][key], "tensor '" + key + "'", d * d * d * d));
    }
    for (Side s : kSides) {
        if (!j["borders"].contains(side_name(s)))
            throw std::runtime_error(std::string("model file: missing border ") + side_name(s));
        m.border(s) = DenseTensor(std::vector<std::size_t>{d},
                                  parse_real_list(j["borders"][side_name(s)],
                                                  std::string("border ") + side_name(s), d));
    }
    m.validate();
    return m;
}

void save_model_file(const GwmModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    save_model(model, out);
}

GwmModel load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return load_model(in);
}

}  // namespace gwm
