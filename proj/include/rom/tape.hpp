#ifndef ROM_TAPE_HPP
#define ROM_TAPE_HPP

#include "rom/matrix.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace rom::nn {

class Tape;

// Handle to a matrix-valued node on a tape.
class Var {
public:
    Var() = default;
    const Matrix& value() const;
    const Matrix& grad() const;
    std::uint32_t id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}
    Tape* tape_ = nullptr;
    std::uint32_t id_ = 0;
};

// Records a forward computation over matrices and evaluates exact
// reverse-mode gradients of a scalar (1x1) result with respect to every
// recorded node. Nodes are appended in evaluation order, so the reverse
// sweep visits them in valid topological order; sequences of recurrent
// steps therefore backpropagate through time with no extra machinery.
class Tape {
public:
    // Leaf node (input or trainable parameter).
    Var leaf(const Matrix& value);

    Var matmul(Var a, Var b);
    // a1*x1 + a2*x2 + bias broadcast over columns; the fused form of a
    // recurrent-cell preactivation.
    Var affine2(Var a1, Var x1, Var a2, Var x2, Var bias);
    // a*x + bias broadcast over columns.
    Var affine(Var a, Var x, Var bias);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var hadamard(Var a, Var b);
    // a.*b + c.*d (elementwise); the fused cell-state update.
    Var hadamard_sum(Var a, Var b, Var c, Var d);
    Var tanh(Var a);
    Var sigmoid(Var a);
    Var elu(Var a);
    Var concat_rows(Var a, Var b);
    Var slice_rows(Var a, std::size_t row_begin, std::size_t row_end);
    Var sum_squares(Var a); // 1x1
    Var scale(Var a, double s);
    Var axpby(double alpha, Var a, double beta, Var b);

    // Reverse sweep from a scalar root. Throws if root is not 1x1.
    // Gradients of all nodes (zero where disconnected) become readable
    // through Var::grad() afterwards.
    void backward(Var root);

    const Matrix& value(std::uint32_t id) const { return nodes_[id].value; }
    const Matrix& grad(std::uint32_t id) const { return nodes_[id].grad; }
    std::size_t size() const { return nodes_.size(); }

private:
    enum class Op : std::uint8_t {
        leaf,
        matmul,
        affine,
        affine2,
        hadamard,
        hadamard_sum,
        tanh_,
        sigmoid_,
        elu_,
        concat_rows,
        slice_rows,
        sum_squares,
        axpby,
    };

    struct Node {
        Op op = Op::leaf;
        std::uint8_t n_parents = 0;
        std::array<std::uint32_t, 5> parents{};
        double alpha = 0.0, beta = 0.0;
        std::size_t i0 = 0, i1 = 0;
        Matrix value;
        Matrix grad;
    };

    Var push(Node node);
    std::vector<Node> nodes_;
};

// Numerically guarded elementwise activations, shared by the plain and
// traced forward paths.
double sigmoid_scalar(double x);
double elu_scalar(double x);
void tanh_elementwise(const Matrix& in, Matrix& out);
void sigmoid_elementwise(const Matrix& in, Matrix& out);
void elu_elementwise(const Matrix& in, Matrix& out);

} // namespace rom::nn

#endif
