#include "gwm/wpa.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

namespace gwm {

using nlohmann::json;

int Wpa::state_index(const std::string& name) const {
    for (std::size_t i = 0; i < states.size(); ++i)
        if (states[i] == name) return static_cast<int>(i);
    return -1;
}

void Wpa::validate() const {
    if (states.empty()) throw std::invalid_argument("Wpa: no states");
    if (std::set<std::string>(states.begin(), states.end()).size() != states.size())
        throw std::invalid_argument("Wpa: duplicate state name");
    if (alphabet.empty()) throw std::invalid_argument("Wpa: empty alphabet");
    if (std::set<char>(alphabet.begin(), alphabet.end()).size() != alphabet.size())
        throw std::invalid_argument("Wpa: duplicate alphabet symbol");

    const int q = static_cast<int>(states.size());
    std::set<std::tuple<char, int, int, int, int>> seen;
    for (const auto& r : rules) {
        if (std::find(alphabet.begin(), alphabet.end(), r.label) == alphabet.end())
            throw std::invalid_argument(std::string("Wpa: rule label '") + r.label +
                                        "' is not in the alphabet");
        for (int pole : {r.west, r.north, r.east, r.south})
            if (pole < 0 || pole >= q)
                throw std::invalid_argument("Wpa: rule pole out of range");
        if (!seen.insert({r.label, r.west, r.north, r.east, r.south}).second)
            throw std::invalid_argument("Wpa: duplicate rule (same label and poles)");
    }
    for (Side s : kSides)
        for (int st : accept_set(s))
            if (st < 0 || st >= q)
                throw std::invalid_argument(std::string("Wpa: acceptance state out of range on ") +
                                            side_name(s));
}

double evaluate_bruteforce(const Wpa& automaton, const Picture& p) {
    automaton.validate();
    if (p.cell_count() > 25)
        throw std::invalid_argument("evaluate_bruteforce: picture of " +
                                    std::to_string(p.cell_count()) +
                                    " cells exceeds the 25-cell enumeration guard");
    for (int r = 0; r < p.rows(); ++r)
        for (int c = 0; c < p.cols(); ++c)
            if (std::find(automaton.alphabet.begin(), automaton.alphabet.end(), p.at(r, c)) ==
                automaton.alphabet.end())
                throw std::invalid_argument(std::string("evaluate_bruteforce: symbol '") +
                                            p.at(r, c) + "' is not in the automaton alphabet");

    const int q = static_cast<int>(automaton.states.size());
    std::array<std::vector<char>, 4> accept_mask;
    for (Side s : kSides) {
        auto& mask = accept_mask[static_cast<std::size_t>(s)];
        mask.assign(q, 0);
        for (int st : automaton.accept_set(s)) mask[st] = 1;
    }
    const auto& in_fw = accept_mask[0];
    const auto& in_fn = accept_mask[1];
    const auto& in_fe = accept_mask[2];
    const auto& in_fs = accept_mask[3];

    // rules grouped by label for the scan at each cell
    std::map<char, std::vector<const WpaRule*>> by_label;
    for (const auto& r : automaton.rules) by_label[r.label].push_back(&r);

    const int m = p.rows(), n = p.cols();
    std::vector<int> south_of_above(n, -1);
    double total = 0.0;

    // Row-major backtracking: at (i,j) the west pole is pinned by the left
    // neighbour and the north pole by the cell above; border cells instead
    // consult the acceptance masks. Prunes every incompatible assignment
    // as soon as it appears.
    auto dfs = [&](auto&& self, int idx, int east_of_left, double product) -> void {
        if (idx == m * n) {
            total += product;
            return;
        }
        const int i = idx / n, j = idx % n;
        auto it = by_label.find(p.at(i, j));
        if (it == by_label.end()) return;
        for (const WpaRule* r : it->second) {
            if (j == 0 ? !in_fw[r->west] : r->west != east_of_left) continue;
            if (i == 0 ? !in_fn[r->north] : r->north != south_of_above[j]) continue;
            if (j == n - 1 && !in_fe[r->east]) continue;
            if (i == m - 1 && !in_fs[r->south]) continue;
            const int saved = south_of_above[j];
            south_of_above[j] = r->south;
            self(self, idx + 1, j == n - 1 ? -1 : r->east, product * r->weight);
            south_of_above[j] = saved;
        }
    };
    dfs(dfs, 0, -1, 1.0);
    return total;
}

Wpa bars_stripes_automaton() {
    Wpa a;
    a.states = {"q0", "qa_right", "qa_down", "qb_right", "qb_down", "qf"};
    a.alphabet = {'a', 'b'};
    const int q0 = 0, qar = 1, qad = 2, qbr = 3, qbd = 4, qf = 5;
    a.accept_set(Side::West) = {q0};
    a.accept_set(Side::North) = {q0};
    a.accept_set(Side::East) = {qf};
    a.accept_set(Side::South) = {qf};

    std::set<std::tuple<char, int, int, int, int>> seen;
    auto expand = [&](char label, std::vector<int> wset, std::vector<int> nset,
                      std::vector<int> eset, std::vector<int> sset) {
        for (int w : wset)
            for (int n : nset)
                for (int e : eset)
                    for (int s : sset)
                        if (seen.insert({label, w, n, e, s}).second)
                            a.rules.push_back({label, w, n, e, s, 1.0});
    };
    // horizontal-stripe and vertical-bar rule families, per label
    expand('a', {q0, qar}, {q0, qar, qbr}, {qf, qar}, {qf, qar});
    expand('a', {q0, qad, qbd}, {q0, qad}, {qf, qad}, {qf, qad});
    expand('b', {q0, qbr}, {q0, qar, qbr}, {qf, qbr}, {qf, qbr});
    expand('b', {q0, qbd, qad}, {q0, qbd}, {qf, qbd}, {qf, qbd});

    a.validate();
    return a;
}

GwmModel compile_to_gwm(const Wpa& automaton) {
    automaton.validate();
    GwmModel m;
    m.dim = static_cast<int>(automaton.states.size());
    m.alphabet = automaton.alphabet;
    const std::size_t d = static_cast<std::size_t>(m.dim);

    for (std::size_t s = 0; s < m.alphabet.size(); ++s)
        m.tensors.emplace_back(std::vector<std::size_t>{d, d, d, d});
    for (const auto& r : automaton.rules) {
        const int s = m.symbol_index(r.label);
        m.tensors[s].at({static_cast<std::size_t>(r.west), static_cast<std::size_t>(r.north),
                         static_cast<std::size_t>(r.east), static_cast<std::size_t>(r.south)}) =
            r.weight;
    }
    for (Side side : kSides) {
        m.border(side) = DenseTensor(std::vector<std::size_t>{d});
        for (int st : automaton.accept_set(side)) m.border(side)[st] = 1.0;
    }
    m.validate();
    return m;
}

void save_wpa(const Wpa& automaton, std::ostream& out) {
    automaton.validate();
    json j;
    j["states"] = automaton.states;
    json alpha = json::array();
    for (char c : automaton.alphabet) alpha.push_back(std::string(1, c));
    j["alphabet"] = alpha;
    for (Side s : kSides) {
        json names = json::array();
        for (int st : automaton.accept_set(s)) names.push_back(automaton.states[st]);
        j[std::string("accept_") + side_name(s)] = names;
    }
    json rules = json::array();
    for (const auto& r : automaton.rules)
        rules.push_back(json::array({std::string(1, r.label), automaton.states[r.west],
                                     automaton.states[r.north], automaton.states[r.east],
                                     automaton.states[r.south], r.weight}));
    j["rules"] = rules;
    out << j.dump(2) << '\n';
}

Wpa load_wpa(std::istream& in) {
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("automaton file: ") + e.what());
    }

    Wpa a;
    if (!j.contains("states") || !j["states"].is_array())
        throw std::runtime_error("automaton file: missing states list");
    for (const auto& s : j["states"]) a.states.push_back(s.get<std::string>());
    if (!j.contains("alphabet") || !j["alphabet"].is_array())
        throw std::runtime_error("automaton file: missing alphabet list");
    for (const auto& sym : j["alphabet"]) {
        if (!sym.is_string() || sym.get<std::string>().size() != 1)
            throw std::runtime_error("automaton file: alphabet entries must be single characters");
        a.alphabet.push_back(sym.get<std::string>()[0]);
    }

    auto lookup_state = [&](const std::string& name) {
        const int idx = a.state_index(name);
        if (idx < 0) throw std::runtime_error("automaton file: unknown state '" + name + "'");
        return idx;
    };
    for (Side s : kSides) {
        const std::string key = std::string("accept_") + side_name(s);
        if (!j.contains(key))
            throw std::runtime_error("automaton file: missing " + key + " list");
        for (const auto& name : j[key]) a.accept_set(s).push_back(lookup_state(name.get<std::string>()));
    }

    if (!j.contains("rules") || !j["rules"].is_array())
        throw std::runtime_error("automaton file: missing rules list");
    for (const auto& r : j["rules"]) {
        if (!r.is_array() || r.size() != 6)
            throw std::runtime_error(
                "automaton file: each rule must be [label, west, north, east, south, weight]");
        const std::string label = r[0].get<std::string>();
        if (label.size() != 1)
            throw std::runtime_error("automaton file: rule labels must be single characters");
        a.rules.push_back({label[0], lookup_state(r[1].get<std::string>()),
                           lookup_state(r[2].get<std::string>()), lookup_state(r[3].get<std::string>()),
                           lookup_state(r[4].get<std::string>()), r[5].get<double>()});
    }
    a.validate();
    return a;
}

void save_wpa_file(const Wpa& automaton, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    save_wpa(automaton, out);
}

Wpa load_wpa_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return load_wpa(in);
}

}  // namespace gwm
