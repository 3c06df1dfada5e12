#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <utility>
#include <vector>

namespace gwm {

namespace detail {

// std::vector storage without value-initialization on resize; contraction
// results are fully overwritten, so zeroing them first is wasted writes.
template <class T>
struct uninit_allocator : std::allocator<T> {
    template <class U>
    struct rebind {
        using other = uninit_allocator<U>;
    };
    template <class U>
    void construct(U* p) noexcept(std::is_nothrow_default_constructible_v<U>) {
        ::new (static_cast<void*>(p)) U;
    }
    template <class U, class... Args>
    void construct(U* p, Args&&... args) {
        ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
    }
};

}  // namespace detail

/// Dense real tensor of arbitrary order, stored flat in row-major order
/// (last mode fastest). Order 0 is a scalar: empty shape, one element.
/// Instances are immutable by convention once built; every operation
/// below returns a fresh tensor, so concurrent reads need no locking.
class DenseTensor {
public:
    using Buffer = std::vector<double, detail::uninit_allocator<double>>;
    struct Uninitialized {};  // tag: caller promises to write every entry

    DenseTensor() : data_(1, 0.0) {}
    explicit DenseTensor(double scalar) : data_(1, scalar) {}
    explicit DenseTensor(std::vector<std::size_t> shape);
    DenseTensor(std::vector<std::size_t> shape, std::vector<double> data);
    DenseTensor(std::vector<std::size_t> shape, Uninitialized);

    static DenseTensor zeros(std::vector<std::size_t> shape) {
        return DenseTensor(std::move(shape));
    }
    static DenseTensor zeros_like(const DenseTensor& other) {
        return DenseTensor(other.shape_);
    }

    std::size_t order() const { return shape_.size(); }
    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    Buffer& values() { return data_; }
    const Buffer& values() const { return data_; }

    double operator[](std::size_t flat) const { return data_[flat]; }
    double& operator[](std::size_t flat) { return data_[flat]; }

    /// Multi-index access; the index list length must equal the order.
    double at(std::initializer_list<std::size_t> idx) const;
    double& at(std::initializer_list<std::size_t> idx);

    /// Value of an order-0 tensor; throws on anything else.
    double scalar() const;

    /// Row-major strides (empty for scalars).
    std::vector<std::size_t> strides() const;

    bool same_shape(const DenseTensor& other) const { return shape_ == other.shape_; }
    bool operator==(const DenseTensor& other) const {
        return shape_ == other.shape_ && data_ == other.data_;
    }

    // In-place helpers used by gradient accumulation and the optimizer.
    void fill(double v);
    void scale(double factor);
    void add(const DenseTensor& other);
    void add_scaled(const DenseTensor& other, double factor);
    double squared_norm() const;

private:
    std::vector<std::size_t> shape_;  // empty = scalar
    Buffer data_;
};

/// (mode of lhs, mode of rhs) pairs, or (mode, mode) for self-contraction.
using ModePairs = std::vector<std::pair<std::size_t, std::size_t>>;

/// Contract `a` with `b` along the given mode pairs. The result's modes
/// are the uncontracted modes of `a` in order, then those of `b`.
/// With no pairs this is the tensor (outer) product.
DenseTensor contract(const DenseTensor& a, const DenseTensor& b, const ModePairs& pairs);

/// Contract a tensor with itself along pairs of its own modes:
/// pairs=[(0,1)] on a matrix gives its trace as a scalar.
DenseTensor self_contract(const DenseTensor& a, const ModePairs& pairs);

/// Tensor product: order(a)+order(b) result with entries a[i]*b[j].
DenseTensor outer(const DenseTensor& a, const DenseTensor& b);

/// Reorder modes. Result mode i is input mode perm[i].
DenseTensor permute(const DenseTensor& a, const std::vector<std::size_t>& perm);

/// Central-difference gradient of a scalar function, one probe per entry.
/// Test oracle quality only; cost is quadratic in the tensor size.
DenseTensor finite_difference_gradient(const std::function<double(const DenseTensor&)>& f,
                                       const DenseTensor& x, double step);

}  // namespace gwm
