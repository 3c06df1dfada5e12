#include "gwm/languages.hpp"

#include "gwm/format.hpp"
#include "gwm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace gwm {

namespace {

void require_binary(const Picture& p, const char* where) {
    for (char c : p.cells())
        if (c != 'a' && c != 'b')
            throw std::invalid_argument(std::string(where) + ": symbol '" + c +
                                        "' is outside the binary alphabet {a, b}");
}

bool rows_constant(const Picture& p) {
    for (int i = 0; i < p.rows(); ++i)
        for (int j = 1; j < p.cols(); ++j)
            if (p.at(i, j) != p.at(i, 0)) return false;
    return true;
}

bool cols_constant(const Picture& p) {
    for (int j = 0; j < p.cols(); ++j)
        for (int i = 1; i < p.rows(); ++i)
            if (p.at(i, j) != p.at(0, j)) return false;
    return true;
}

}  // namespace

bool bs_membership(const Picture& p) {
    require_binary(p, "bs_membership");
    return cols_constant(p) || rows_constant(p);
}

double bs_target(const Picture& p) {
    if (!bs_membership(p)) return 0.0;
    const char first = p.at(0, 0);
    for (char c : p.cells())
        if (c != first) return 1.0;
    return 2.0;
}

bool sb_membership(const Picture& p) {
    require_binary(p, "sb_membership");
    if (p.rows() == 1) return true;
    for (int s = 1; s <= p.cols(); ++s) {
        bool ok = true;
        for (int i = 0; i + 1 < p.rows() && ok; ++i)
            for (int j = 0; j < p.cols(); ++j) {
                const char want = (j - s >= 0) ? p.at(i, j - s) : 'b';
                if (p.at(i + 1, j) != want) {
                    ok = false;
                    break;
                }
            }
        if (ok) return true;
    }
    return false;
}

std::vector<Picture> enumerate_bs_positives(int rows, int cols) {
    std::vector<Picture> out;
    // horizontal stripes: one symbol per row
    for (std::uint32_t mask = 0; mask < (1u << rows); ++mask) {
        Picture p(rows, cols);
        for (int i = 0; i < rows; ++i) {
            const char c = (mask >> i) & 1 ? 'b' : 'a';
            for (int j = 0; j < cols; ++j) p.at(i, j) = c;
        }
        out.push_back(std::move(p));
    }
    // vertical bars: one symbol per column, skipping the two constants
    for (std::uint32_t mask = 1; mask + 1 < (1u << cols); ++mask) {
        Picture p(rows, cols);
        for (int j = 0; j < cols; ++j) {
            const char c = (mask >> j) & 1 ? 'b' : 'a';
            for (int i = 0; i < rows; ++i) p.at(i, j) = c;
        }
        out.push_back(std::move(p));
    }
    return out;
}

namespace {

using SizeKey = std::pair<int, int>;

struct SizeKeyHash {
    std::size_t operator()(const SizeKey& k) const {
        return std::hash<long long>()((static_cast<long long>(k.first) << 32) | k.second);
    }
};

bool is_member(LanguageKind lang, const Picture& p) {
    return lang == LanguageKind::BarsStripes ? bs_membership(p) : sb_membership(p);
}

double positive_label(LanguageKind lang, const Picture& p) {
    return lang == LanguageKind::BarsStripes ? bs_target(p) : 1.0;
}

Picture uniform_picture(int rows, int cols, Rng& rng) {
    Picture p(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) p.at(i, j) = rng.next_u64() & 1 ? 'b' : 'a';
    return p;
}

Picture sb_generate(int rows, int cols, Rng& rng) {
    Picture p(rows, cols);
    for (int j = 0; j < cols; ++j) p.at(0, j) = rng.next_u64() & 1 ? 'b' : 'a';
    const int s = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(cols)));
    for (int i = 1; i < rows; ++i)
        for (int j = 0; j < cols; ++j) p.at(i, j) = (j - s >= 0) ? p.at(i - 1, j - s) : 'b';
    return p;
}

// All members at one size, by scanning the full picture space; only
// used when 2^(m*n) is small.
std::vector<Picture> enumerate_members(LanguageKind lang, int rows, int cols) {
    if (lang == LanguageKind::BarsStripes) return enumerate_bs_positives(rows, cols);
    std::vector<Picture> out;
    const int cells = rows * cols;
    for (std::uint64_t mask = 0; mask < (1ull << cells); ++mask) {
        Picture p(rows, cols);
        for (int c = 0; c < cells; ++c)
            p.at(c / cols, c % cols) = (mask >> c) & 1 ? 'b' : 'a';
        if (sb_membership(p)) out.push_back(std::move(p));
    }
    return out;
}

constexpr int kEnumerableCells = 16;   // full-space scans capped at 2^16 pictures
constexpr int kRejectionCap = 8192;

[[noreturn]] void infeasible(const std::string& why) {
    throw std::runtime_error("generate_dataset: infeasible request: " + why);
}

}  // namespace

Dataset generate_dataset(LanguageKind language, const std::vector<std::pair<int, int>>& sizes,
                         int count, double positive_fraction, std::uint64_t seed,
                         const Dataset* exclude) {
    if (count < 1) throw std::invalid_argument("generate_dataset: count must be at least 1");
    if (!(positive_fraction >= 0.0 && positive_fraction <= 1.0))
        throw std::invalid_argument("generate_dataset: positive_fraction must lie in [0, 1]");
    if (sizes.empty()) throw std::invalid_argument("generate_dataset: no sizes given");
    for (const auto& [m, n] : sizes)
        if (m < 1 || n < 1)
            throw std::invalid_argument("generate_dataset: sizes must be at least 1x1");

    const int n_pos = static_cast<int>(std::llround(count * positive_fraction));
    const int n_neg = count - n_pos;

    if (language == LanguageKind::ShiftingBits && n_neg > 0)
        for (const auto& [m, n] : sizes)
            if (m == 1)
                infeasible("no negatives exist at size 1x" + std::to_string(n) +
                           " (every single-row picture is in the language)");

    std::unordered_set<std::string> excluded;
    if (exclude)
        for (const auto& ex : exclude->examples) excluded.insert(ex.picture.key());

    Rng rng(mix_seed(seed, 0));
    std::vector<LabeledExample> examples;
    examples.reserve(static_cast<std::size_t>(count));

    // ---- positives ----
    std::unordered_map<SizeKey, std::vector<Picture>, SizeKeyHash> pools;
    std::unordered_map<SizeKey, std::vector<Picture>, SizeKeyHash> unseen_pools;
    auto pool_for = [&](const SizeKey& sz) -> const std::vector<Picture>& {
        auto it = pools.find(sz);
        if (it == pools.end())
            it = pools.emplace(sz, enumerate_members(language, sz.first, sz.second)).first;
        return it->second;
    };
    auto unseen_for = [&](const SizeKey& sz) -> std::vector<Picture>& {
        auto it = unseen_pools.find(sz);
        if (it == unseen_pools.end()) {
            std::vector<Picture> rest;
            for (const auto& p : pool_for(sz))
                if (!excluded.count(p.key())) rest.push_back(p);
            it = unseen_pools.emplace(sz, std::move(rest)).first;
        }
        return it->second;
    };
    const bool pools_enumerable =
        language == LanguageKind::BarsStripes ||
        std::all_of(sizes.begin(), sizes.end(),
                    [](const SizeKey& s) { return s.first * s.second <= kEnumerableCells; });

    const bool strict_distinct = positive_fraction == 1.0 && exclude != nullptr;
    if (strict_distinct) {
        if (!pools_enumerable)
            infeasible("cannot enumerate the language at the requested sizes to enforce "
                       "distinct positives");
        std::size_t available = 0;
        for (const auto& sz : sizes) available += unseen_for(sz).size();
        if (static_cast<std::size_t>(n_pos) > available)
            infeasible(std::to_string(n_pos) + " distinct unused positives requested but only " +
                       std::to_string(available) + " exist outside the excluded set");
        for (int k = 0; k < n_pos; ++k) {
            std::vector<const SizeKey*> open;
            for (const auto& sz : sizes)
                if (!unseen_for(sz).empty()) open.push_back(&sz);
            auto& pool = unseen_for(*open[rng.uniform_index(open.size())]);
            const std::size_t pick = rng.uniform_index(pool.size());
            std::swap(pool[pick], pool.back());
            examples.push_back({pool.back(), positive_label(language, pool.back())});
            pool.pop_back();
        }
    } else {
        for (int k = 0; k < n_pos; ++k) {
            const SizeKey sz = sizes[rng.uniform_index(sizes.size())];
            Picture pic(1, 1);
            if (language == LanguageKind::BarsStripes || sz.first * sz.second <= kEnumerableCells) {
                const auto& unseen = unseen_for(sz);
                const auto& pool = unseen.empty() ? pool_for(sz) : unseen;
                pic = pool[rng.uniform_index(pool.size())];
            } else {
                pic = sb_generate(sz.first, sz.second, rng);
                for (int tries = 0; excluded.count(pic.key()) && tries < kRejectionCap; ++tries)
                    pic = sb_generate(sz.first, sz.second, rng);
            }
            examples.push_back({pic, positive_label(language, pic)});
        }
    }

    // ---- negatives: pairwise distinct, never in the excluded set ----
    std::unordered_map<SizeKey, std::vector<Picture>, SizeKeyHash> neg_pools;
    auto neg_pool_for = [&](const SizeKey& sz) -> std::vector<Picture>& {
        auto it = neg_pools.find(sz);
        if (it == neg_pools.end()) {
            std::vector<Picture> pool;
            std::size_t universe = 0;
            const int cells = sz.first * sz.second;
            for (std::uint64_t mask = 0; mask < (1ull << cells); ++mask) {
                Picture p(sz.first, sz.second);
                for (int c = 0; c < cells; ++c)
                    p.at(c / sz.second, c % sz.second) = (mask >> c) & 1 ? 'b' : 'a';
                if (is_member(language, p)) continue;
                ++universe;
                if (!excluded.count(p.key())) pool.push_back(std::move(p));
            }
            const std::string size_name =
                std::to_string(sz.first) + "x" + std::to_string(sz.second);
            if (universe == 0)
                infeasible("the language covers every picture of size " + size_name +
                           " (no negatives exist)");
            if (pool.empty())
                infeasible("all " + std::to_string(universe) + " non-members of size " +
                           size_name + " are excluded");
            it = neg_pools.emplace(sz, std::move(pool)).first;
        }
        return it->second;
    };
    std::unordered_map<SizeKey, std::vector<Picture>, SizeKeyHash> neg_fresh;  // not yet drawn
    std::unordered_set<std::string> drawn_negatives;

    for (int k = 0; k < n_neg; ++k) {
        const SizeKey sz = sizes[rng.uniform_index(sizes.size())];
        Picture pic(1, 1);
        if (sz.first * sz.second <= kEnumerableCells) {
            auto fresh_it = neg_fresh.find(sz);
            if (fresh_it == neg_fresh.end()) fresh_it = neg_fresh.emplace(sz, neg_pool_for(sz)).first;
            auto& fresh = fresh_it->second;
            if (!fresh.empty()) {
                const std::size_t pick = rng.uniform_index(fresh.size());
                std::swap(fresh[pick], fresh.back());
                pic = std::move(fresh.back());
                fresh.pop_back();
            } else {
                // size exhausted: repeats within the dataset are allowed,
                // the excluded set still is not
                const auto& pool = neg_pool_for(sz);
                pic = pool[rng.uniform_index(pool.size())];
            }
        } else {
            bool found = false;
            for (int tries = 0; tries < kRejectionCap && !found; ++tries) {
                pic = uniform_picture(sz.first, sz.second, rng);
                found = !is_member(language, pic) && !excluded.count(pic.key()) &&
                        !drawn_negatives.count(pic.key());
            }
            if (!found)
                infeasible("could not sample a fresh negative of size " +
                           std::to_string(sz.first) + "x" + std::to_string(sz.second) + " after " +
                           std::to_string(kRejectionCap) + " attempts");
            drawn_negatives.insert(pic.key());
        }
        examples.push_back({std::move(pic), 0.0});
    }

    // mix positives and negatives
    for (std::size_t i = examples.size(); i > 1; --i)
        std::swap(examples[i - 1], examples[rng.uniform_index(i)]);

    Dataset ds;
    ds.examples = std::move(examples);
    ds.meta.generator = language == LanguageKind::BarsStripes ? "bs" : "sb";
    ds.meta.sizes = sizes;
    ds.meta.seed = seed;
    ds.meta.positive_fraction = static_cast<double>(n_pos) / count;
    return ds;
}

namespace {

double actual_positive_fraction(const Dataset& ds) {
    if (ds.examples.empty()) return 0.0;
    std::size_t pos = 0;
    for (const auto& ex : ds.examples)
        if (ex.label > 0.5) ++pos;
    return static_cast<double>(pos) / static_cast<double>(ds.examples.size());
}

}  // namespace

void save_dataset(const Dataset& ds, std::ostream& out) {
    out << "# generator=" << ds.meta.generator << '\n';
    out << "# sizes=";
    for (std::size_t i = 0; i < ds.meta.sizes.size(); ++i) {
        if (i) out << ',';
        out << ds.meta.sizes[i].first << 'x' << ds.meta.sizes[i].second;
    }
    out << '\n';
    out << "# seed=" << ds.meta.seed << '\n';
    out << "# positive_fraction=" << format_double(actual_positive_fraction(ds)) << '\n';
    if (!ds.meta.split.empty()) out << "# split=" << ds.meta.split << '\n';
    for (const auto& ex : ds.examples) {
        out << ex.picture.rows() << ' ' << ex.picture.cols() << ' ' << format_double(ex.label)
            << '\n';
        for (int r = 0; r < ex.picture.rows(); ++r) out << ex.picture.row(r) << '\n';
    }
}

Dataset load_dataset(std::istream& in) {
    Dataset ds;
    std::string line;
    int line_no = 0;
    auto fail = [&](const std::string& why) {
        throw std::runtime_error("dataset line " + std::to_string(line_no) + ": " + why);
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::string body = line.substr(1);
            const auto eq = body.find('=');
            if (eq == std::string::npos) continue;
            std::string key = body.substr(0, eq);
            key.erase(0, key.find_first_not_of(' '));
            const std::string value = body.substr(eq + 1);
            if (key == "generator") ds.meta.generator = value;
            else if (key == "seed") ds.meta.seed = std::stoull(value);
            else if (key == "positive_fraction") ds.meta.positive_fraction = parse_double(value);
            else if (key == "split") ds.meta.split = value;
            else if (key == "sizes") {
                std::stringstream ss(value);
                std::string item;
                while (std::getline(ss, item, ',')) {
                    const auto x = item.find('x');
                    if (x == std::string::npos) fail("bad sizes entry '" + item + "'");
                    ds.meta.sizes.emplace_back(std::stoi(item.substr(0, x)),
                                               std::stoi(item.substr(x + 1)));
                }
            }
            continue;
        }

        std::istringstream header(line);
        int m = 0, n = 0;
        std::string label_text;
        if (!(header >> m >> n >> label_text)) fail("expected 'rows cols label'");
        if (m < 1 || n < 1) fail("picture dimensions must be positive");
        const double label = parse_double(label_text);

        std::vector<std::string> rows;
        for (int r = 0; r < m; ++r) {
            if (!std::getline(in, line)) fail("unexpected end of file inside a picture");
            ++line_no;
            if (static_cast<int>(line.size()) != n)
                fail("picture row has length " + std::to_string(line.size()) + ", expected " +
                     std::to_string(n));
            rows.push_back(line);
        }
        ds.examples.push_back({Picture::from_rows(rows), label});
    }

    const double actual = actual_positive_fraction(ds);
    if (ds.meta.positive_fraction != 0.0 && ds.meta.positive_fraction != actual)
        throw std::runtime_error("dataset metadata positive_fraction " +
                                 format_double(ds.meta.positive_fraction) +
                                 " does not match the labels (" + format_double(actual) + ")");
    ds.meta.positive_fraction = actual;
    return ds;
}

void save_dataset_file(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    save_dataset(ds, out);
}

Dataset load_dataset_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return load_dataset(in);
}

}  // namespace gwm
