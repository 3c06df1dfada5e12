#pragma once

#include "gwm/tensor.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace gwm {

/// Edge directions of a grid site, in the global mode order used by every
/// site tensor: (west, north, east, south).
enum class Side { West = 0, North = 1, East = 2, South = 3 };

inline constexpr std::array<Side, 4> kSides = {Side::West, Side::North, Side::East, Side::South};

const char* side_name(Side s);

/// A graph weighted model over pictures: one order-4 tensor per alphabet
/// symbol (modes west,north,east,south, all of extent `dim`), plus one
/// border vector per side. A picture's value is the full contraction of
/// the grid tensor network the picture induces.
struct GwmModel {
    int dim = 0;
    std::vector<char> alphabet;           // ordered, unique
    std::vector<DenseTensor> tensors;     // parallel to alphabet, shape {d,d,d,d}
    std::array<DenseTensor, 4> borders;   // indexed by Side, extent {d}

    /// Index of a symbol in the alphabet, or -1.
    int symbol_index(char symbol) const;

    const DenseTensor& border(Side s) const { return borders[static_cast<std::size_t>(s)]; }
    DenseTensor& border(Side s) { return borders[static_cast<std::size_t>(s)]; }

    /// Throws if any shape disagrees with `dim` or the alphabet is bad.
    void validate() const;

    bool operator==(const GwmModel& other) const = default;
};

/// Per-parameter gradients, shaped exactly like the owning model.
struct GradientAccumulator {
    std::vector<DenseTensor> tensors;
    std::array<DenseTensor, 4> borders;

    static GradientAccumulator zeros_like(const GwmModel& model);

    DenseTensor& border(Side s) { return borders[static_cast<std::size_t>(s)]; }
    const DenseTensor& border(Side s) const { return borders[static_cast<std::size_t>(s)]; }

    void scale(double factor);
    void add_scaled(const GradientAccumulator& other, double factor);
    double squared_norm() const;
};

/// Model with every entry drawn i.i.d. Normal(0, std^2), deterministically
/// from `seed`. Symbols are drawn in alphabet order, then borders
/// west,north,east,south.
GwmModel random_init(int dim, std::vector<char> alphabet, double std, std::uint64_t seed);

/// Gauge transformation by an invertible d-x-d matrix: inverse applied on
/// west/north modes, the matrix itself on east/south modes, borders
/// transformed so every value computed on every picture is unchanged.
GwmModel change_of_basis(const GwmModel& model, const DenseTensor& basis);

void save_model(const GwmModel& model, std::ostream& out);
void save_model_file(const GwmModel& model, const std::string& path);
GwmModel load_model(std::istream& in);
GwmModel load_model_file(const std::string& path);

}  // namespace gwm
