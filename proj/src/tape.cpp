#include "rom/tape.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace rom::nn {

namespace {

void check(bool ok, const char* what)
{
    if (!ok)
        throw std::invalid_argument(std::string("tape: ") + what);
}

void same_shape(const Matrix& a, const Matrix& b, const char* what)
{
    check(a.rows() == b.rows() && a.cols() == b.cols(), what);
}

// bias is r x 1, broadcast over the columns of m.
void add_bias_inplace(Matrix& m, const Matrix& bias)
{
    check(bias.rows() == m.rows() && bias.cols() == 1, "bias shape");
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double* row = m.row(i);
        const double bi = bias(i, 0);
        for (std::size_t j = 0; j < m.cols(); ++j)
            row[j] += bi;
    }
}

void accumulate_row_sums(const Matrix& m, Matrix& bias_grad)
{
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* row = m.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j)
            s += row[j];
        bias_grad(i, 0) += s;
    }
}

} // namespace

double sigmoid_scalar(double x)
{
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double elu_scalar(double x)
{
    return x > 0.0 ? x : std::expm1(x);
}

void tanh_elementwise(const Matrix& in, Matrix& out)
{
    out = Matrix(in.rows(), in.cols());
    const double* pi = in.data();
    double* po = out.data();
    for (std::size_t i = 0, n = in.size(); i < n; ++i)
        po[i] = std::tanh(pi[i]);
}

void sigmoid_elementwise(const Matrix& in, Matrix& out)
{
    out = Matrix(in.rows(), in.cols());
    const double* pi = in.data();
    double* po = out.data();
    for (std::size_t i = 0, n = in.size(); i < n; ++i)
        po[i] = sigmoid_scalar(pi[i]);
}

void elu_elementwise(const Matrix& in, Matrix& out)
{
    out = Matrix(in.rows(), in.cols());
    const double* pi = in.data();
    double* po = out.data();
    for (std::size_t i = 0, n = in.size(); i < n; ++i)
        po[i] = elu_scalar(pi[i]);
}

const Matrix& Var::value() const
{
    return tape_->value(id_);
}

const Matrix& Var::grad() const
{
    return tape_->grad(id_);
}

Var Tape::push(Node node)
{
    nodes_.push_back(std::move(node));
    return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::leaf(const Matrix& value)
{
    Node n;
    n.op = Op::leaf;
    n.value = value;
    return push(std::move(n));
}

Var Tape::matmul(Var a, Var b)
{
    Node n;
    n.op = Op::matmul;
    n.n_parents = 2;
    n.parents = {a.id_, b.id_};
    rom::matmul(value(a.id_), value(b.id_), n.value);
    return push(std::move(n));
}

Var Tape::affine(Var a, Var x, Var bias)
{
    Node n;
    n.op = Op::affine;
    n.n_parents = 3;
    n.parents = {a.id_, x.id_, bias.id_};
    rom::matmul(value(a.id_), value(x.id_), n.value);
    add_bias_inplace(n.value, value(bias.id_));
    return push(std::move(n));
}

Var Tape::affine2(Var a1, Var x1, Var a2, Var x2, Var bias)
{
    Node n;
    n.op = Op::affine2;
    n.n_parents = 5;
    n.parents = {a1.id_, x1.id_, a2.id_, x2.id_, bias.id_};
    rom::matmul(value(a1.id_), value(x1.id_), n.value);
    rom::matmul_acc(value(a2.id_), value(x2.id_), n.value);
    add_bias_inplace(n.value, value(bias.id_));
    return push(std::move(n));
}

Var Tape::add(Var a, Var b)
{
    return axpby(1.0, a, 1.0, b);
}

Var Tape::sub(Var a, Var b)
{
    return axpby(1.0, a, -1.0, b);
}

Var Tape::axpby(double alpha, Var a, double beta, Var b)
{
    same_shape(value(a.id_), value(b.id_), "axpby shape");
    Node n;
    n.op = Op::axpby;
    n.n_parents = 2;
    n.parents = {a.id_, b.id_};
    n.alpha = alpha;
    n.beta = beta;
    n.value = value(a.id_);
    scale_inplace(n.value, alpha);
    axpy_inplace(n.value, beta, value(b.id_));
    return push(std::move(n));
}

Var Tape::scale(Var a, double s)
{
    Node n;
    n.op = Op::axpby;
    n.n_parents = 2;
    n.parents = {a.id_, a.id_};
    n.alpha = s;
    n.beta = 0.0;
    n.value = value(a.id_);
    scale_inplace(n.value, s);
    return push(std::move(n));
}

Var Tape::hadamard(Var a, Var b)
{
    same_shape(value(a.id_), value(b.id_), "hadamard shape");
    Node n;
    n.op = Op::hadamard;
    n.n_parents = 2;
    n.parents = {a.id_, b.id_};
    n.value = value(a.id_);
    const double* pb = value(b.id_).data();
    double* pv = n.value.data();
    for (std::size_t i = 0, m = n.value.size(); i < m; ++i)
        pv[i] *= pb[i];
    return push(std::move(n));
}

Var Tape::hadamard_sum(Var a, Var b, Var c, Var d)
{
    same_shape(value(a.id_), value(b.id_), "hadamard_sum shape");
    same_shape(value(c.id_), value(d.id_), "hadamard_sum shape");
    same_shape(value(a.id_), value(c.id_), "hadamard_sum shape");
    Node n;
    n.op = Op::hadamard_sum;
    n.n_parents = 4;
    n.parents = {a.id_, b.id_, c.id_, d.id_};
    const Matrix& va = value(a.id_);
    const Matrix& vb = value(b.id_);
    const Matrix& vc = value(c.id_);
    const Matrix& vd = value(d.id_);
    n.value = Matrix(va.rows(), va.cols());
    double* pv = n.value.data();
    const double *pa = va.data(), *pb = vb.data(), *pc = vc.data(), *pd = vd.data();
    for (std::size_t i = 0, m = n.value.size(); i < m; ++i)
        pv[i] = pa[i] * pb[i] + pc[i] * pd[i];
    return push(std::move(n));
}

Var Tape::tanh(Var a)
{
    Node n;
    n.op = Op::tanh_;
    n.n_parents = 1;
    n.parents = {a.id_};
    tanh_elementwise(value(a.id_), n.value);
    return push(std::move(n));
}

Var Tape::sigmoid(Var a)
{
    Node n;
    n.op = Op::sigmoid_;
    n.n_parents = 1;
    n.parents = {a.id_};
    sigmoid_elementwise(value(a.id_), n.value);
    return push(std::move(n));
}

Var Tape::elu(Var a)
{
    Node n;
    n.op = Op::elu_;
    n.n_parents = 1;
    n.parents = {a.id_};
    elu_elementwise(value(a.id_), n.value);
    return push(std::move(n));
}

Var Tape::concat_rows(Var a, Var b)
{
    const Matrix& va = value(a.id_);
    const Matrix& vb = value(b.id_);
    check(va.cols() == vb.cols(), "concat_rows column mismatch");
    Node n;
    n.op = Op::concat_rows;
    n.n_parents = 2;
    n.parents = {a.id_, b.id_};
    n.value = Matrix(va.rows() + vb.rows(), va.cols());
    std::memcpy(n.value.data(), va.data(), va.size() * sizeof(double));
    std::memcpy(n.value.data() + va.size(), vb.data(), vb.size() * sizeof(double));
    return push(std::move(n));
}

Var Tape::slice_rows(Var a, std::size_t row_begin, std::size_t row_end)
{
    const Matrix& va = value(a.id_);
    check(row_begin < row_end && row_end <= va.rows(), "slice_rows range");
    Node n;
    n.op = Op::slice_rows;
    n.n_parents = 1;
    n.parents = {a.id_};
    n.i0 = row_begin;
    n.i1 = row_end;
    n.value = Matrix(row_end - row_begin, va.cols());
    std::memcpy(n.value.data(), va.row(row_begin), n.value.size() * sizeof(double));
    return push(std::move(n));
}

Var Tape::sum_squares(Var a)
{
    Node n;
    n.op = Op::sum_squares;
    n.n_parents = 1;
    n.parents = {a.id_};
    n.value = Matrix(1, 1);
    n.value(0, 0) = dot(value(a.id_), value(a.id_));
    return push(std::move(n));
}

void Tape::backward(Var root)
{
    check(root.tape_ == this, "backward: foreign var");
    const std::uint32_t rid = root.id_;
    check(value(rid).rows() == 1 && value(rid).cols() == 1,
          "backward requires a scalar (1x1) root");

    // Mark nodes the root depends on; everything else keeps a zero grad.
    std::vector<char> needed(nodes_.size(), 0);
    needed[rid] = 1;
    for (std::uint32_t id = rid + 1; id-- > 0;) {
        if (!needed[id])
            continue;
        const Node& n = nodes_[id];
        for (std::uint8_t p = 0; p < n.n_parents; ++p)
            needed[n.parents[p]] = 1;
    }

    for (auto& n : nodes_) {
        n.grad = Matrix(n.value.rows(), n.value.cols());
    }
    nodes_[rid].grad(0, 0) = 1.0;

    for (std::uint32_t id = rid + 1; id-- > 0;) {
        if (!needed[id])
            continue;
        Node& n = nodes_[id];
        const Matrix& g = n.grad;
        switch (n.op) {
        case Op::leaf:
            break;
        case Op::matmul: {
            matmul_nt_acc(g, nodes_[n.parents[1]].value, nodes_[n.parents[0]].grad);
            matmul_tn_acc(nodes_[n.parents[0]].value, g, nodes_[n.parents[1]].grad);
            break;
        }
        case Op::affine: {
            matmul_nt_acc(g, nodes_[n.parents[1]].value, nodes_[n.parents[0]].grad);
            matmul_tn_acc(nodes_[n.parents[0]].value, g, nodes_[n.parents[1]].grad);
            accumulate_row_sums(g, nodes_[n.parents[2]].grad);
            break;
        }
        case Op::affine2: {
            matmul_nt_acc(g, nodes_[n.parents[1]].value, nodes_[n.parents[0]].grad);
            matmul_tn_acc(nodes_[n.parents[0]].value, g, nodes_[n.parents[1]].grad);
            matmul_nt_acc(g, nodes_[n.parents[3]].value, nodes_[n.parents[2]].grad);
            matmul_tn_acc(nodes_[n.parents[2]].value, g, nodes_[n.parents[3]].grad);
            accumulate_row_sums(g, nodes_[n.parents[4]].grad);
            break;
        }
        case Op::hadamard: {
            Matrix& ga = nodes_[n.parents[0]].grad;
            Matrix& gb = nodes_[n.parents[1]].grad;
            const double* pg = g.data();
            const double* pa = nodes_[n.parents[0]].value.data();
            const double* pb = nodes_[n.parents[1]].value.data();
            for (std::size_t i = 0, m = g.size(); i < m; ++i) {
                ga.data()[i] += pg[i] * pb[i];
                gb.data()[i] += pg[i] * pa[i];
            }
            break;
        }
        case Op::hadamard_sum: {
            const double* pg = g.data();
            const double* pa = nodes_[n.parents[0]].value.data();
            const double* pb = nodes_[n.parents[1]].value.data();
            const double* pc = nodes_[n.parents[2]].value.data();
            const double* pd = nodes_[n.parents[3]].value.data();
            double* ga = nodes_[n.parents[0]].grad.data();
            double* gb = nodes_[n.parents[1]].grad.data();
            double* gc = nodes_[n.parents[2]].grad.data();
            double* gd = nodes_[n.parents[3]].grad.data();
            for (std::size_t i = 0, m = g.size(); i < m; ++i) {
                ga[i] += pg[i] * pb[i];
                gb[i] += pg[i] * pa[i];
                gc[i] += pg[i] * pd[i];
                gd[i] += pg[i] * pc[i];
            }
            break;
        }
        case Op::tanh_: {
            double* gp = nodes_[n.parents[0]].grad.data();
            const double* pg = g.data();
            const double* py = n.value.data();
            for (std::size_t i = 0, m = g.size(); i < m; ++i)
                gp[i] += pg[i] * (1.0 - py[i] * py[i]);
            break;
        }
        case Op::sigmoid_: {
            double* gp = nodes_[n.parents[0]].grad.data();
            const double* pg = g.data();
            const double* py = n.value.data();
            for (std::size_t i = 0, m = g.size(); i < m; ++i)
                gp[i] += pg[i] * py[i] * (1.0 - py[i]);
            break;
        }
        case Op::elu_: {
            double* gp = nodes_[n.parents[0]].grad.data();
            const double* pg = g.data();
            const double* px = nodes_[n.parents[0]].value.data();
            const double* py = n.value.data();
            for (std::size_t i = 0, m = g.size(); i < m; ++i)
                gp[i] += pg[i] * (px[i] > 0.0 ? 1.0 : py[i] + 1.0);
            break;
        }
        case Op::concat_rows: {
            Matrix& ga = nodes_[n.parents[0]].grad;
            Matrix& gb = nodes_[n.parents[1]].grad;
            const double* pg = g.data();
            for (std::size_t i = 0, m = ga.size(); i < m; ++i)
                ga.data()[i] += pg[i];
            for (std::size_t i = 0, m = gb.size(); i < m; ++i)
                gb.data()[i] += pg[i + ga.size()];
            break;
        }
        case Op::slice_rows: {
            Matrix& ga = nodes_[n.parents[0]].grad;
            const double* pg = g.data();
            double* dst = ga.row(n.i0);
            for (std::size_t i = 0, m = g.size(); i < m; ++i)
                dst[i] += pg[i];
            break;
        }
        case Op::sum_squares: {
            const double s = 2.0 * g(0, 0);
            axpy_inplace(nodes_[n.parents[0]].grad, s, nodes_[n.parents[0]].value);
            break;
        }
        case Op::axpby: {
            axpy_inplace(nodes_[n.parents[0]].grad, n.alpha, g);
            if (n.beta != 0.0)
                axpy_inplace(nodes_[n.parents[1]].grad, n.beta, g);
            break;
        }
        }
    }
}

} // namespace rom::nn
