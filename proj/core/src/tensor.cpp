#include "gwm/tensor.hpp"

#include <Eigen/Core>

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace gwm {

namespace {

std::size_t checked_volume(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) {
        if (e == 0) throw std::invalid_argument("DenseTensor: zero extent is not allowed");
        n *= e;
    }
    return n;
}

std::vector<std::size_t> row_major_strides(const std::vector<std::size_t>& shape) {
    std::vector<std::size_t> st(shape.size());
    std::size_t acc = 1;
    for (std::size_t k = shape.size(); k-- > 0;) {
        st[k] = acc;
        acc *= shape[k];
    }
    return st;
}

using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMapRM = Eigen::Map<const MatrixRM>;
using MapRM = Eigen::Map<MatrixRM>;

bool is_identity_order(const std::vector<std::size_t>& order) {
    for (std::size_t i = 0; i < order.size(); ++i)
        if (order[i] != i) return false;
    return true;
}

// One GEMM operand: the tensor flattened to a matrix after bringing the
// contracted modes together. When those modes already sit contiguously at
// the front or back the original buffer is used as-is (possibly via a
// transposed view); otherwise whichever of the two layouts permutes more
// cheaply (fewer, more contiguous runs) is copied.
struct GemmOperand {
    const double* data = nullptr;
    bool transposed = false;  // buffer laid out (K x free) instead of (free x K)
    DenseTensor storage;      // owns the copy when one was needed
};

// Copy cost proxy: run count, with a bonus for a stride-1 innermost run.
std::size_t permute_cost(const DenseTensor& t, const std::vector<std::size_t>& order) {
    std::size_t runs = 0;
    std::size_t last_stride = 0;
    std::size_t stride_acc = 1;
    std::vector<std::size_t> st(t.order());
    for (std::size_t k = t.order(); k-- > 0;) {
        st[k] = stride_acc;
        stride_acc *= t.shape()[k];
    }
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i + 1;
        while (j < order.size() && order[j] == order[j - 1] + 1) ++j;
        ++runs;
        last_stride = st[order[j - 1]];
        i = j;
    }
    return 2 * runs + (last_stride == 1 ? 0 : 1);
}

GemmOperand flatten_for_gemm(const DenseTensor& t,
                             const std::vector<std::size_t>& free_modes,
                             const std::vector<std::size_t>& contracted_modes) {
    GemmOperand op;
    std::vector<std::size_t> tail_order = free_modes;
    tail_order.insert(tail_order.end(), contracted_modes.begin(), contracted_modes.end());
    if (is_identity_order(tail_order)) {
        op.data = t.data();
        return op;
    }
    std::vector<std::size_t> head_order = contracted_modes;
    head_order.insert(head_order.end(), free_modes.begin(), free_modes.end());
    if (is_identity_order(head_order)) {
        op.data = t.data();
        op.transposed = true;
        return op;
    }
    if (permute_cost(t, head_order) < permute_cost(t, tail_order)) {
        op.storage = permute(t, head_order);
        op.transposed = true;
    } else {
        op.storage = permute(t, tail_order);
    }
    op.data = op.storage.data();
    return op;
}

}  // namespace

DenseTensor::DenseTensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(checked_volume(shape_), 0.0) {}

DenseTensor::DenseTensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(data.begin(), data.end()) {
    if (checked_volume(shape_) != data_.size())
        throw std::invalid_argument("DenseTensor: shape volume " +
                                    std::to_string(checked_volume(shape_)) +
                                    " does not match data length " + std::to_string(data_.size()));
}

DenseTensor::DenseTensor(std::vector<std::size_t> shape, Uninitialized)
    : shape_(std::move(shape)) {
    data_.resize(checked_volume(shape_));
}

double DenseTensor::at(std::initializer_list<std::size_t> idx) const {
    return const_cast<DenseTensor*>(this)->at(idx);
}

double& DenseTensor::at(std::initializer_list<std::size_t> idx) {
    if (idx.size() != shape_.size())
        throw std::invalid_argument("DenseTensor::at: index count does not match order");
    std::size_t flat = 0;
    std::size_t k = 0;
    auto st = strides();
    for (std::size_t i : idx) {
        if (i >= shape_[k]) throw std::out_of_range("DenseTensor::at: index out of range");
        flat += i * st[k];
        ++k;
    }
    return data_[flat];
}

double DenseTensor::scalar() const {
    if (!shape_.empty())
        throw std::invalid_argument("DenseTensor::scalar called on an order-" +
                                    std::to_string(shape_.size()) + " tensor");
    return data_[0];
}

std::vector<std::size_t> DenseTensor::strides() const { return row_major_strides(shape_); }

void DenseTensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void DenseTensor::scale(double factor) {
    for (double& x : data_) x *= factor;
}

void DenseTensor::add(const DenseTensor& other) { add_scaled(other, 1.0); }

void DenseTensor::add_scaled(const DenseTensor& other, double factor) {
    if (!same_shape(other))
        throw std::invalid_argument("DenseTensor::add_scaled: shape mismatch");
    const double* src = other.data();
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += factor * src[i];
}

double DenseTensor::squared_norm() const {
    double s = 0.0;
    for (double x : data_) s += x * x;
    return s;
}

DenseTensor outer(const DenseTensor& a, const DenseTensor& b) {
    std::vector<std::size_t> shape = a.shape();
    shape.insert(shape.end(), b.shape().begin(), b.shape().end());
    DenseTensor out(std::move(shape), DenseTensor::Uninitialized{});
    const std::size_t nb = b.size();
    double* dst = out.data();
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double ai = a[i];
        const double* bp = b.data();
        for (std::size_t j = 0; j < nb; ++j) dst[i * nb + j] = ai * bp[j];
    }
    return out;
}

DenseTensor contract(const DenseTensor& a, const DenseTensor& b, const ModePairs& pairs) {
    if (pairs.empty()) return outer(a, b);

    std::vector<bool> a_used(a.order(), false), b_used(b.order(), false);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto [ma, mb] = pairs[k];
        if (ma >= a.order() || mb >= b.order())
            throw std::invalid_argument("contract: pair " + std::to_string(k) + " (" +
                                        std::to_string(ma) + "," + std::to_string(mb) +
                                        ") is out of range for orders " +
                                        std::to_string(a.order()) + "," + std::to_string(b.order()));
        if (a_used[ma] || b_used[mb])
            throw std::invalid_argument("contract: pair " + std::to_string(k) +
                                        " repeats an already contracted mode");
        if (a.shape()[ma] != b.shape()[mb])
            throw std::invalid_argument("contract: pair " + std::to_string(k) + " (" +
                                        std::to_string(ma) + "," + std::to_string(mb) +
                                        ") has mismatched extents " +
                                        std::to_string(a.shape()[ma]) + " vs " +
                                        std::to_string(b.shape()[mb]));
        a_used[ma] = true;
        b_used[mb] = true;
    }

    std::vector<std::size_t> a_free, b_free, a_con(pairs.size()), b_con(pairs.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        a_con[k] = pairs[k].first;
        b_con[k] = pairs[k].second;
    }
    for (std::size_t m = 0; m < a.order(); ++m)
        if (!a_used[m]) a_free.push_back(m);
    for (std::size_t m = 0; m < b.order(); ++m)
        if (!b_used[m]) b_free.push_back(m);

    std::size_t rows = 1, cols = 1, inner = 1;
    std::vector<std::size_t> out_shape;
    out_shape.reserve(a_free.size() + b_free.size());
    for (std::size_t m : a_free) {
        out_shape.push_back(a.shape()[m]);
        rows *= a.shape()[m];
    }
    for (std::size_t m : b_free) {
        out_shape.push_back(b.shape()[m]);
        cols *= b.shape()[m];
    }
    for (std::size_t m : a_con) inner *= a.shape()[m];

    GemmOperand lhs = flatten_for_gemm(a, a_free, a_con);
    GemmOperand rhs = flatten_for_gemm(b, b_free, b_con);

    DenseTensor out(std::move(out_shape), DenseTensor::Uninitialized{});
    MapRM om(out.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    const auto R = static_cast<Eigen::Index>(rows);
    const auto C = static_cast<Eigen::Index>(cols);
    const auto K = static_cast<Eigen::Index>(inner);
    if (!lhs.transposed && !rhs.transposed)
        om.noalias() = ConstMapRM(lhs.data, R, K) * ConstMapRM(rhs.data, C, K).transpose();
    else if (!lhs.transposed && rhs.transposed)
        om.noalias() = ConstMapRM(lhs.data, R, K) * ConstMapRM(rhs.data, K, C);
    else if (lhs.transposed && !rhs.transposed)
        om.noalias() = ConstMapRM(lhs.data, K, R).transpose() * ConstMapRM(rhs.data, C, K).transpose();
    else
        om.noalias() = ConstMapRM(lhs.data, K, R).transpose() * ConstMapRM(rhs.data, K, C);
    return out;
}

DenseTensor self_contract(const DenseTensor& a, const ModePairs& pairs) {
    std::vector<bool> used(a.order(), false);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto [m1, m2] = pairs[k];
        if (m1 >= a.order() || m2 >= a.order())
            throw std::invalid_argument("self_contract: pair " + std::to_string(k) +
                                        " is out of range for order " + std::to_string(a.order()));
        if (m1 == m2 || used[m1] || used[m2])
            throw std::invalid_argument("self_contract: pair " + std::to_string(k) +
                                        " repeats a mode");
        if (a.shape()[m1] != a.shape()[m2])
            throw std::invalid_argument("self_contract: pair " + std::to_string(k) +
                                        " has mismatched extents " +
                                        std::to_string(a.shape()[m1]) + " vs " +
                                        std::to_string(a.shape()[m2]));
        used[m1] = true;
        used[m2] = true;
    }

    const auto st = row_major_strides(a.shape());
    std::vector<std::size_t> free_extent, free_stride, diag_extent, diag_stride;
    for (std::size_t m = 0; m < a.order(); ++m) {
        if (!used[m]) {
            free_extent.push_back(a.shape()[m]);
            free_stride.push_back(st[m]);
        }
    }
    for (const auto& [m1, m2] : pairs) {
        diag_extent.push_back(a.shape()[m1]);
        diag_stride.push_back(st[m1] + st[m2]);
    }

    DenseTensor out(free_extent, DenseTensor::Uninitialized{});
    std::vector<std::size_t> fidx(free_extent.size(), 0);
    for (std::size_t flat = 0; flat < out.size(); ++flat) {
        std::size_t base = 0;
        for (std::size_t d = 0; d < fidx.size(); ++d) base += fidx[d] * free_stride[d];

        // sum over the joint diagonal of every contracted pair
        double sum = 0.0;
        std::vector<std::size_t> didx(diag_extent.size(), 0);
        while (true) {
            std::size_t off = base;
            for (std::size_t d = 0; d < didx.size(); ++d) off += didx[d] * diag_stride[d];
            sum += a[off];
            bool advanced = false;
            for (std::size_t d = didx.size(); d-- > 0;) {
                if (++didx[d] < diag_extent[d]) {
                    advanced = true;
                    break;
                }
                didx[d] = 0;
            }
            if (!advanced) break;
        }
        out[flat] = sum;

        std::size_t d = fidx.size();
        while (d > 0) {
            --d;
            if (++fidx[d] < free_extent[d]) break;
            fidx[d] = 0;
        }
    }
    return out;
}

DenseTensor permute(const DenseTensor& a, const std::vector<std::size_t>& perm) {
    if (perm.size() != a.order())
        throw std::invalid_argument("permute: permutation length does not match order");
    std::vector<bool> seen(perm.size(), false);
    for (std::size_t p : perm) {
        if (p >= perm.size() || seen[p])
            throw std::invalid_argument("permute: not a permutation of the modes");
        seen[p] = true;
    }

    const auto st = row_major_strides(a.shape());
    std::vector<std::size_t> out_shape(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) out_shape[i] = a.shape()[perm[i]];
    DenseTensor out(out_shape, DenseTensor::Uninitialized{});

    // Coalesce runs of modes that stay adjacent (perm[i+1] == perm[i]+1);
    // each run moves as one unit with the stride of its first mode.
    std::vector<std::size_t> run_extent, run_stride;
    for (std::size_t i = 0; i < perm.size();) {
        std::size_t j = i + 1;
        std::size_t extent = a.shape()[perm[i]];
        while (j < perm.size() && perm[j] == perm[j - 1] + 1) {
            extent *= a.shape()[perm[j]];
            ++j;
        }
        run_extent.push_back(extent);
        run_stride.push_back(st[perm[j - 1]]);  // innermost mode of the run
        i = j;
    }

    double* dst = out.data();
    const double* src = a.data();
    const std::size_t runs = run_extent.size();

    if (runs == 1) {  // identity
        std::copy(src, src + out.size(), dst);
        return out;
    }
    if (runs == 2 && run_stride[1] == 1) {  // strided rows of contiguous blocks
        const std::size_t n0 = run_extent[0], n1 = run_extent[1];
        const std::size_t s0 = run_stride[0];
        for (std::size_t b = 0; b < n0; ++b) {
            std::copy(src + b * s0, src + b * s0 + n1, dst);
            dst += n1;
        }
        return out;
    }
    if (runs == 3 && run_stride[2] == 1) {  // (a,b,c) -> (b,a,c), c contiguous
        const std::size_t nb = run_extent[0], na = run_extent[1], nc = run_extent[2];
        const std::size_t sb = run_stride[0], sa = run_stride[1];
        for (std::size_t b = 0; b < nb; ++b) {
            const double* row = src + b * sb;
            for (std::size_t i = 0; i < na; ++i) {
                const double* cell = row + i * sa;
                for (std::size_t c = 0; c < nc; ++c) *dst++ = cell[c];
            }
        }
        return out;
    }

    // general case: odometer over the outer runs, explicit loop over the
    // last run (contiguous or strided reads, always contiguous writes)
    const std::size_t inner_n = run_extent[runs - 1];
    const std::size_t inner_s = run_stride[runs - 1];
    std::vector<std::size_t> idx(runs - 1, 0);
    std::size_t offset = 0;
    const std::size_t blocks = out.size() / inner_n;
    for (std::size_t n = 0; n < blocks; ++n) {
        if (inner_s == 1) {
            std::copy(src + offset, src + offset + inner_n, dst);
            dst += inner_n;
        } else {
            for (std::size_t k = 0; k < inner_n; ++k) *dst++ = src[offset + k * inner_s];
        }
        std::size_t d = runs - 1;
        while (d > 0) {
            --d;
            offset += run_stride[d];
            if (++idx[d] < run_extent[d]) break;
            offset -= run_extent[d] * run_stride[d];
            idx[d] = 0;
        }
    }
    return out;
}

DenseTensor finite_difference_gradient(const std::function<double(const DenseTensor&)>& f,
                                       const DenseTensor& x, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("finite_difference_gradient: step must be > 0");
    DenseTensor grad = DenseTensor::zeros_like(x);
    DenseTensor probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = probe[i];
        probe[i] = orig + step;
        const double fp = f(probe);
        probe[i] = orig - step;
        const double fm = f(probe);
        probe[i] = orig;
        grad[i] = (fp - fm) / (2.0 * step);
    }
    return grad;
}

}  // namespace gwm
