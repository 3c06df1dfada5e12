#include "gwm/contraction.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace gwm {

namespace {

struct PairSplit {
    std::vector<std::size_t> a_free, b_free;  // ascending
    std::vector<std::size_t> a_con, b_con;    // pair order
};

PairSplit split_modes(std::size_t a_order, std::size_t b_order, const ModePairs& pairs) {
    PairSplit s;
    std::vector<bool> a_used(a_order, false), b_used(b_order, false);
    for (const auto& [ma, mb] : pairs) {
        s.a_con.push_back(ma);
        s.b_con.push_back(mb);
        a_used[ma] = true;
        b_used[mb] = true;
    }
    for (std::size_t m = 0; m < a_order; ++m)
        if (!a_used[m]) s.a_free.push_back(m);
    for (std::size_t m = 0; m < b_order; ++m)
        if (!b_used[m]) s.b_free.push_back(m);
    return s;
}

// Rank of each entry of `modes` among its sorted order.
std::vector<std::size_t> sorted_ranks(const std::vector<std::size_t>& modes) {
    std::vector<std::size_t> sorted = modes;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> ranks(modes.size());
    for (std::size_t k = 0; k < modes.size(); ++k)
        ranks[k] = static_cast<std::size_t>(
            std::lower_bound(sorted.begin(), sorted.end(), modes[k]) - sorted.begin());
    return ranks;
}

bool is_identity(const std::vector<std::size_t>& perm) {
    for (std::size_t i = 0; i < perm.size(); ++i)
        if (perm[i] != i) return false;
    return true;
}

DenseTensor maybe_permute(DenseTensor t, const std::vector<std::size_t>& perm) {
    return is_identity(perm) ? std::move(t) : permute(t, perm);
}

// d(out)/d(a) pulled back through out = contract(a, b, pairs), given the
// adjoint of out. The contraction of the adjoint with b recovers every
// entry of a's cotangent; a permutation restores a's mode order.
DenseTensor contract_vjp_lhs(const DenseTensor& out_adj, const DenseTensor& b,
                             std::size_t a_order, const ModePairs& pairs) {
    const PairSplit s = split_modes(a_order, b.order(), pairs);
    ModePairs adj_pairs;
    for (std::size_t t = 0; t < s.b_free.size(); ++t)
        adj_pairs.emplace_back(s.a_free.size() + t, s.b_free[t]);
    DenseTensor tmp = contract(out_adj, b, adj_pairs);

    std::vector<std::size_t> perm(a_order);
    for (std::size_t u = 0; u < s.a_free.size(); ++u) perm[s.a_free[u]] = u;
    const auto b_ranks = sorted_ranks(s.b_con);
    for (std::size_t k = 0; k < pairs.size(); ++k)
        perm[s.a_con[k]] = s.a_free.size() + b_ranks[k];
    return maybe_permute(std::move(tmp), perm);
}

DenseTensor contract_vjp_rhs(const DenseTensor& a, const DenseTensor& out_adj,
                             std::size_t b_order, const ModePairs& pairs) {
    const PairSplit s = split_modes(a.order(), b_order, pairs);
    ModePairs adj_pairs;
    for (std::size_t u = 0; u < s.a_free.size(); ++u)
        adj_pairs.emplace_back(s.a_free[u], u);
    DenseTensor tmp = contract(a, out_adj, adj_pairs);

    std::vector<std::size_t> perm(b_order);
    const auto a_ranks = sorted_ranks(s.a_con);
    for (std::size_t k = 0; k < pairs.size(); ++k)
        perm[s.b_con[k]] = a_ranks[k];
    for (std::size_t t = 0; t < s.b_free.size(); ++t)
        perm[s.b_free[t]] = pairs.size() + t;
    return maybe_permute(std::move(tmp), perm);
}

}  // namespace

int Tape::leaf(DenseTensor value) {
    nodes_.push_back(Node{std::move(value), -1, -1, {}});
    return static_cast<int>(nodes_.size()) - 1;
}

int Tape::contract(int lhs, int rhs, ModePairs pairs) {
    DenseTensor value = gwm::contract(nodes_[lhs].value, nodes_[rhs].value, pairs);
    nodes_.push_back(Node{std::move(value), lhs, rhs, std::move(pairs)});
    return static_cast<int>(nodes_.size()) - 1;
}

std::vector<DenseTensor> Tape::backward(int output) const {
    std::vector<DenseTensor> adj(nodes_.size());
    std::vector<char> seeded(nodes_.size(), 0);

    auto accumulate = [&](int node, DenseTensor contribution) {
        if (!seeded[node]) {
            adj[node] = std::move(contribution);
            seeded[node] = 1;
        } else {
            adj[node].add(contribution);
        }
    };

    if (nodes_[output].value.order() != 0)
        throw std::invalid_argument("Tape::backward: output node must be a scalar");
    adj[output] = DenseTensor(1.0);
    seeded[output] = 1;

    for (int k = output; k >= 0; --k) {
        if (!seeded[k] || nodes_[k].lhs < 0) continue;
        const Node& nd = nodes_[k];
        const DenseTensor& a = nodes_[nd.lhs].value;
        const DenseTensor& b = nodes_[nd.rhs].value;
        accumulate(nd.lhs, contract_vjp_lhs(adj[k], b, a.order(), nd.pairs));
        accumulate(nd.rhs, contract_vjp_rhs(a, adj[k], b.order(), nd.pairs));
    }
    return adj;
}

namespace {

void check_symbols(const GwmModel& model, const Picture& p) {
    for (int r = 0; r < p.rows(); ++r)
        for (int c = 0; c < p.cols(); ++c)
            if (model.symbol_index(p.at(r, c)) < 0)
                throw std::invalid_argument(std::string("evaluate: symbol '") + p.at(r, c) +
                                            "' at cell (" + std::to_string(r) + "," +
                                            std::to_string(c) + ") is not in the model alphabet");
}

// Models are stored with site modes (west,north,east,south); transposing
// the picture swaps west<->north and east<->south everywhere, which lets
// the sweep below assume rows <= cols.
const std::vector<std::size_t> kTransposePerm = {1, 0, 3, 2};

GwmModel transpose_model(const GwmModel& m) {
    GwmModel t;
    t.dim = m.dim;
    t.alphabet = m.alphabet;
    t.tensors.reserve(m.tensors.size());
    for (const auto& T : m.tensors) t.tensors.push_back(permute(T, kTransposePerm));
    t.border(Side::West) = m.border(Side::North);
    t.border(Side::North) = m.border(Side::West);
    t.border(Side::East) = m.border(Side::South);
    t.border(Side::South) = m.border(Side::East);
    return t;
}

struct SweepLeaves {
    std::vector<int> symbol;  // leaf id per alphabet index, -1 if unused
    std::array<int, 4> border{-1, -1, -1, -1};
};

// Column-by-column boundary sweep, rows <= cols. The running boundary
// tensor B carries one east-pointing mode per row. Absorbing column j
// walks its rows top to bottom; in flight the working tensor carries the
// dangling south mode of the previous site as its last mode:
//   [old east edges of rows i+1.., new east edges of rows ..i, south(i)]
// Every step is a plain contract(), so one Tape records the whole plan.
int record_sweep(Tape& tape, const GwmModel& model, const Picture& p, SweepLeaves& leaves) {
    const int m = p.rows();
    const int n = p.cols();

    leaves.symbol.assign(model.alphabet.size(), -1);
    auto symbol_leaf = [&](int r, int c) {
        const int s = model.symbol_index(p.at(r, c));
        if (leaves.symbol[s] < 0) leaves.symbol[s] = tape.leaf(model.tensors[s]);
        return leaves.symbol[s];
    };
    for (Side side : kSides)
        leaves.border[static_cast<std::size_t>(side)] = tape.leaf(model.border(side));
    const int bw = leaves.border[0], bn = leaves.border[1];
    const int be = leaves.border[2], bs = leaves.border[3];

    // Symbol tensors with the north border absorbed, for row-0 sites.
    std::vector<int> north_absorbed(model.alphabet.size(), -1);
    auto top_leaf = [&](int c) {
        const int s = model.symbol_index(p.at(0, c));
        if (north_absorbed[s] < 0)
            north_absorbed[s] = tape.contract(symbol_leaf(0, c), bn, {{1, 0}});
        return north_absorbed[s];
    };

    int boundary = bw;
    for (int i = 1; i < m; ++i) boundary = tape.contract(boundary, bw, {});

    const std::size_t south_pos = static_cast<std::size_t>(m);
    for (int j = 0; j < n; ++j) {
        int work = tape.contract(boundary, top_leaf(j), {{0, 0}});
        for (int i = 1; i < m; ++i)
            work = tape.contract(work, symbol_leaf(i, j), {{0, 0}, {south_pos, 1}});
        boundary = tape.contract(work, bs, {{south_pos, 0}});
    }
    for (int i = 0; i < m; ++i) boundary = tape.contract(boundary, be, {{0, 0}});
    return boundary;
}

Evaluation gradient_oriented(const GwmModel& model, const Picture& p) {
    Tape tape;
    SweepLeaves leaves;
    const int out = record_sweep(tape, model, p, leaves);

    Evaluation result;
    result.value = tape.value(out).scalar();
    result.grads = GradientAccumulator::zeros_like(model);

    const auto adjoints = tape.backward(out);
    for (std::size_t s = 0; s < model.alphabet.size(); ++s) {
        const int id = leaves.symbol[s];
        if (id >= 0 && adjoints[id].order() == 4) result.grads.tensors[s] = adjoints[id];
    }
    for (Side side : kSides) {
        const int id = leaves.border[static_cast<std::size_t>(side)];
        if (adjoints[id].order() == 1) result.grads.border(side) = adjoints[id];
    }
    return result;
}

}  // namespace

double evaluate(const GwmModel& model, const Picture& picture) {
    check_symbols(model, picture);
    Tape tape;
    SweepLeaves leaves;
    if (picture.rows() > picture.cols()) {
        const GwmModel t = transpose_model(model);
        return tape.value(record_sweep(tape, t, transpose(picture), leaves)).scalar();
    }
    return tape.value(record_sweep(tape, model, picture, leaves)).scalar();
}

Evaluation gradient(const GwmModel& model, const Picture& picture) {
    check_symbols(model, picture);
    if (picture.rows() <= picture.cols()) return gradient_oriented(model, picture);

    const GwmModel t = transpose_model(model);
    Evaluation e = gradient_oriented(t, transpose(picture));

    Evaluation out;
    out.value = e.value;
    out.grads = GradientAccumulator::zeros_like(model);
    for (std::size_t s = 0; s < model.alphabet.size(); ++s)
        out.grads.tensors[s] = permute(e.grads.tensors[s], kTransposePerm);
    out.grads.border(Side::West) = e.grads.border(Side::North);
    out.grads.border(Side::North) = e.grads.border(Side::West);
    out.grads.border(Side::East) = e.grads.border(Side::South);
    out.grads.border(Side::South) = e.grads.border(Side::East);
    return out;
}

}  // namespace gwm
