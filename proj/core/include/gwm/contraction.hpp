#pragma once

#include "gwm/model.hpp"
#include "gwm/picture.hpp"
#include "gwm/tensor.hpp"

#include <vector>

namespace gwm {

/// Record of a contraction DAG. Leaves hold parameter values; interior
/// nodes are contract() applications. Replaying the recorded adjoint
/// rules backwards yields exact reverse-mode gradients with respect to
/// every leaf.
class Tape {
public:
    int leaf(DenseTensor value);
    int contract(int lhs, int rhs, ModePairs pairs);

    const DenseTensor& value(int node) const { return nodes_[node].value; }

    /// Adjoints of every node given d(output)/d(output) = 1.
    /// Nodes that do not influence the output get empty slots.
    std::vector<DenseTensor> backward(int output) const;

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        DenseTensor value;
        int lhs = -1;
        int rhs = -1;
        ModePairs pairs;
    };
    std::vector<Node> nodes_;
};

/// Value of the model on a picture, contracted as a boundary sweep along
/// the longer picture dimension (boundary tensor of order min(rows, cols)).
double evaluate(const GwmModel& model, const Picture& picture);

struct Evaluation {
    double value = 0.0;
    GradientAccumulator grads;
};

/// Value plus d(value)/d(parameter) for every model parameter, by
/// reverse-mode differentiation through the recorded sweep. Gradients of
/// a symbol tensor sum over all sites carrying that symbol; border
/// gradients sum over all boundary attachments. The value is produced by
/// the same contraction sequence evaluate() runs, so the two agree
/// bit-for-bit.
Evaluation gradient(const GwmModel& model, const Picture& picture);

}  // namespace gwm
