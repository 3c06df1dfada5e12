#pragma once

#include "gwm/picture.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gwm {

// Both built-in languages are over the two-letter alphabet {a, b},
// a for white and b for black. The predicates reject anything else.

/// True when every row is constant or every column is constant.
bool bs_membership(const Picture& p);

/// 2 on constant pictures, 1 on mixed pictures that are striped in one
/// direction, 0 on everything else.
double bs_target(const Picture& p);

/// True when some single shift s in [1, cols] makes each row the s-shifted
/// copy of the previous one, with positions shifted past the left edge
/// filled with b. Vacuously true for single-row pictures.
bool sb_membership(const Picture& p);

/// Distinct members at the given size: 2^m + 2^n - 2.
std::vector<Picture> enumerate_bs_positives(int rows, int cols);

struct LabeledExample {
    Picture picture;
    double label;
};

struct DatasetMeta {
    std::string generator;                    // "bs" or "sb"
    std::vector<std::pair<int, int>> sizes;   // (rows, cols) included
    std::uint64_t seed = 0;
    double positive_fraction = 0.0;           // matches the actual labels
    std::string split;                        // free-form, e.g. "train"
};

struct Dataset {
    DatasetMeta meta;
    std::vector<LabeledExample> examples;
};

enum class LanguageKind { BarsStripes, ShiftingBits };

/// Balanced sample of `count` labeled pictures with per-example sizes
/// drawn uniformly from `sizes`. Positives come from the language
/// (bars/stripes targets are the 0/1/2 values, shifting-bits labels are
/// 1); negatives are uniform random non-members, pairwise distinct and
/// never equal to an example of `exclude`. Positives avoid `exclude` as
/// long as unseen members remain at the drawn size; with positive_fraction
/// exactly 1 and an exclude set the positives are additionally required
/// to be pairwise distinct, and the request fails if fewer than `count`
/// unused members exist. Deterministic given the seed.
Dataset generate_dataset(LanguageKind language, const std::vector<std::pair<int, int>>& sizes,
                         int count, double positive_fraction, std::uint64_t seed,
                         const Dataset* exclude = nullptr);

void save_dataset(const Dataset& ds, std::ostream& out);
void save_dataset_file(const Dataset& ds, const std::string& path);
Dataset load_dataset(std::istream& in);
Dataset load_dataset_file(const std::string& path);

}  // namespace gwm
