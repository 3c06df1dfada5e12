#pragma once

#include "gwm/model.hpp"
#include "gwm/picture.hpp"

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace gwm {

/// One weighted rule: a label plus the four pole states it exposes.
struct WpaRule {
    char label;
    int west, north, east, south;  // state indices
    double weight;

    bool operator==(const WpaRule&) const = default;
};

/// Weighted picture automaton. A run assigns one rule per cell such that
/// labels match the picture, east poles equal the west poles of right
/// neighbours and south poles equal the north poles of lower neighbours;
/// a run is accepted when every outer pole lies in the acceptance set of
/// its side. The automaton maps a picture to the sum over accepted runs
/// of the product of rule weights.
struct Wpa {
    std::vector<std::string> states;
    std::vector<char> alphabet;
    std::vector<WpaRule> rules;               // unique (label, poles) tuples
    std::array<std::vector<int>, 4> accept;   // indexed by Side, sorted state indices

    int state_index(const std::string& name) const;
    const std::vector<int>& accept_set(Side s) const { return accept[static_cast<std::size_t>(s)]; }
    std::vector<int>& accept_set(Side s) { return accept[static_cast<std::size_t>(s)]; }

    void validate() const;
};

/// Exact value by enumerating accepted runs with row-major backtracking.
/// Guarded to pictures of at most 25 cells.
double evaluate_bruteforce(const Wpa& automaton, const Picture& picture);

/// The six-state automaton whose support is the bars-and-stripes
/// language: value 2 on constant pictures, 1 on mixed single-direction
/// stripe pictures, 0 elsewhere (grids of at least two cells).
Wpa bars_stripes_automaton();

/// Equivalent model with one dimension per state: tensor entries are rule
/// weights, border vectors indicate acceptance sets.
GwmModel compile_to_gwm(const Wpa& automaton);

void save_wpa(const Wpa& automaton, std::ostream& out);
void save_wpa_file(const Wpa& automaton, const std::string& path);
Wpa load_wpa(std::istream& in);
Wpa load_wpa_file(const std::string& path);

}  // namespace gwm
