#pragma once

#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chdrl/error.hpp"
#include "chdrl/rng.hpp"

namespace chdrl {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using RowMajorMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Vec = Vector<double>;
using Mat = Matrix<double>;
using Index = Eigen::Index;

enum class Activation { Tanh, Identity };

inline std::string to_string(Activation a) { return a == Activation::Tanh ? "tanh" : "identity"; }

inline Activation activation_from_string(const std::string& s)
{
    if (s == "tanh")
        return Activation::Tanh;
    if (s == "identity")
        return Activation::Identity;
    throw Error("unknown activation '" + s + "'");
}

/// Partial derivatives of a scalar loss with respect to an Mlp's flat parameters.
/// Uses the same layout as Mlp::flatten().
template <typename Scalar>
struct Gradient {
    Vector<Scalar> flat;

    explicit Gradient(Index n = 0) : flat(Vector<Scalar>::Zero(n)) {}

    Index size() const { return flat.size(); }
    void zero() { flat.setZero(); }
    Gradient& operator+=(const Gradient& other)
    {
        flat += other.flat;
        return *this;
    }
};

/// tanh through the vectorized exponential of -2|x|; absolute error within
/// a few ulp of 1, never overflows.
template <typename Derived>
auto fast_tanh(const Eigen::ArrayBase<Derived>& x)
{
    using Plain = typename Derived::PlainObject;
    const Plain e = (typename Derived::Scalar(-2) * x.abs()).exp();
    return Plain(x.sign() * (typename Derived::Scalar(1) - e) / (typename Derived::Scalar(1) + e));
}

/// Cached activations of a batched forward pass, needed by backward().
template <typename Scalar>
struct Tape {
    // activations[0] is the input batch, activations[l + 1] the output of layer l.
    std::vector<Matrix<Scalar>> activations;
};

/// Fully connected network with tanh hidden layers and an identity output.
///
/// Parameters live in one contiguous vector: for each layer, the weight
/// matrix (out x in, row-major) followed by the bias (out). Batched calls
/// take one sample per column.
template <typename Scalar>
class Mlp {
public:
    using VectorType = Vector<Scalar>;
    using MatrixType = Matrix<Scalar>;

    Mlp() = default;

    explicit Mlp(std::vector<Index> layer_sizes, Activation hidden = Activation::Tanh,
                 Activation output = Activation::Identity)
        : sizes_(std::move(layer_sizes)), hidden_(hidden), output_(output)
    {
        if (sizes_.size() < 2)
            throw Error("Mlp needs at least input and output sizes");
        for (Index s : sizes_)
            if (s < 1)
                throw Error("Mlp layer sizes must be positive");
        Index offset = 0;
        for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
            offsets_.push_back(offset);
            offset += (sizes_[l] + 1) * sizes_[l + 1];
        }
        params_ = VectorType::Zero(offset);
    }

    // Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
    static Mlp initialized(std::vector<Index> layer_sizes, Rng& rng, Activation hidden = Activation::Tanh,
                           Activation output = Activation::Identity)
    {
        Mlp net(std::move(layer_sizes), hidden, output);
        std::uniform_real_distribution<Scalar> unit(Scalar(-1), Scalar(1));
        for (std::size_t l = 0; l < net.layer_count(); ++l) {
            const Scalar bound = Scalar(1) / std::sqrt(Scalar(net.sizes_[l]));
            const Index begin = net.offsets_[l];
            const Index end = begin + (net.sizes_[l] + 1) * net.sizes_[l + 1];
            for (Index i = begin; i < end; ++i)
                net.params_[i] = bound * unit(rng);
        }
        return net;
    }

    const std::vector<Index>& layer_sizes() const { return sizes_; }
    std::size_t layer_count() const { return sizes_.empty() ? 0 : sizes_.size() - 1; }
    Index input_size() const { return sizes_.front(); }
    Index output_size() const { return sizes_.back(); }
    Index parameter_count() const { return params_.size(); }
    Activation hidden_activation() const { return hidden_; }
    Activation output_activation() const { return output_; }

    bool same_architecture(const Mlp& other) const
    {
        return sizes_ == other.sizes_ && hidden_ == other.hidden_ && output_ == other.output_;
    }

    const VectorType& flatten() const { return params_; }

    void load(std::span<const Scalar> flat)
    {
        if (static_cast<Index>(flat.size()) != params_.size())
            throw Error("parameter length mismatch: expected " + std::to_string(params_.size()) + ", got " +
                        std::to_string(flat.size()));
        std::copy(flat.begin(), flat.end(), params_.data());
    }

    void load(const VectorType& flat) { load(std::span<const Scalar>(flat.data(), static_cast<std::size_t>(flat.size()))); }

    // Direct access for optimizers and soft updates; the length is fixed.
    Eigen::Map<VectorType> parameters() { return Eigen::Map<VectorType>(params_.data(), params_.size()); }

    Eigen::Map<const RowMajorMatrix<Scalar>> weights(std::size_t layer) const
    {
        return {params_.data() + offsets_[layer], sizes_[layer + 1], sizes_[layer]};
    }

    Eigen::Map<const VectorType> bias(std::size_t layer) const
    {
        return {params_.data() + offsets_[layer] + sizes_[layer] * sizes_[layer + 1], sizes_[layer + 1]};
    }

    VectorType forward(const VectorType& x) const
    {
        check_input(x.size());
        VectorType a = x;
        for (std::size_t l = 0; l < layer_count(); ++l) {
            VectorType z = weights(l) * a + bias(l);
            apply_activation(z, activation_of(l));
            a = std::move(z);
        }
        return a;
    }

    MatrixType forward(const MatrixType& batch, Tape<Scalar>* tape = nullptr) const
    {
        check_input(batch.rows());
        if (tape) {
            tape->activations.clear();
            tape->activations.push_back(batch);
        }
        MatrixType a = batch;
        for (std::size_t l = 0; l < layer_count(); ++l) {
            MatrixType z = weights(l) * a;
            z.colwise() += bias(l);
            apply_activation(z, activation_of(l));
            if (tape)
                tape->activations.push_back(z);
            a = std::move(z);
        }
        return a;
    }

    /// Gradient of sum_j upstream(:, j) . output(:, j) with respect to the
    /// parameters. If input_grad is non-null it receives the gradient with
    /// respect to the input batch.
    Gradient<Scalar> backward(const Tape<Scalar>& tape, const MatrixType& upstream,
                              MatrixType* input_grad = nullptr) const
    {
        if (tape.activations.size() != layer_count() + 1)
            throw Error("tape does not belong to this network");
        const MatrixType& out = tape.activations.back();
        if (upstream.rows() != output_size() || upstream.cols() != out.cols())
            throw Error("upstream shape mismatch: expected " + std::to_string(output_size()) + "x" +
                        std::to_string(out.cols()));
        Gradient<Scalar> grad(parameter_count());
        MatrixType delta = upstream;
        for (std::size_t li = layer_count(); li-- > 0;) {
            const MatrixType& a_out = tape.activations[li + 1];
            const MatrixType& a_in = tape.activations[li];
            if (activation_of(li) == Activation::Tanh)
                delta.array() *= Scalar(1) - a_out.array().square();
            Eigen::Map<RowMajorMatrix<Scalar>> gw(grad.flat.data() + offsets_[li], sizes_[li + 1], sizes_[li]);
            gw.noalias() = delta * a_in.transpose();
            Eigen::Map<VectorType>(grad.flat.data() + offsets_[li] + sizes_[li] * sizes_[li + 1], sizes_[li + 1]) =
                delta.rowwise().sum();
            if (li > 0 || input_grad) {
                MatrixType next = weights(li).transpose() * delta;
                delta = std::move(next);
            }
        }
        if (input_grad)
            *input_grad = std::move(delta);
        return grad;
    }

    Gradient<Scalar> backward(const VectorType& x, const VectorType& upstream) const
    {
        Tape<Scalar> tape;
        forward(MatrixType(x), &tape);
        return backward(tape, MatrixType(upstream));
    }

private:
    Activation activation_of(std::size_t layer) const { return layer + 1 == layer_count() ? output_ : hidden_; }

    template <typename Derived>
    static void apply_activation(Eigen::MatrixBase<Derived>& z, Activation act)
    {
        if (act == Activation::Tanh)
            z = fast_tanh(z.array()).matrix();
    }

    void check_input(Index n) const
    {
        if (n != input_size())
            throw Error("input dimension mismatch: expected " + std::to_string(input_size()) + ", got " +
                        std::to_string(n));
    }

    std::vector<Index> sizes_;
    std::vector<Index> offsets_;
    Activation hidden_ = Activation::Tanh;
    Activation output_ = Activation::Identity;
    VectorType params_;
};

/// Bias-corrected Adam.
template <typename Scalar>
struct AdamState {
    Vector<Scalar> m;
    Vector<Scalar> v;
    long step = 0;
    Scalar lr = Scalar(3e-4);
    Scalar beta1 = Scalar(0.9);
    Scalar beta2 = Scalar(0.999);
    Scalar eps = Scalar(1e-8);

    AdamState() = default;
    explicit AdamState(Index n, Scalar learning_rate = Scalar(3e-4))
        : m(Vector<Scalar>::Zero(n)), v(Vector<Scalar>::Zero(n)), lr(learning_rate)
    {
    }

    void reset()
    {
        m.setZero();
        v.setZero();
        step = 0;
    }

    template <typename ParamDerived, typename GradDerived>
    void apply(Eigen::MatrixBase<ParamDerived>&& params, const Eigen::MatrixBase<GradDerived>& grads)
    {
        apply(params, grads);
    }

    template <typename ParamDerived, typename GradDerived>
    void apply(Eigen::MatrixBase<ParamDerived>& params, const Eigen::MatrixBase<GradDerived>& grads)
    {
        if (params.size() != m.size() || grads.size() != m.size())
            throw Error("Adam shape mismatch: state " + std::to_string(m.size()) + ", params " +
                        std::to_string(params.size()) + ", grads " + std::to_string(grads.size()));
        if (!grads.allFinite())
            throw Error("non-finite gradient passed to Adam");
        ++step;
        m = beta1 * m + (Scalar(1) - beta1) * grads;
        v = beta2 * v + (Scalar(1) - beta2) * grads.cwiseAbs2();
        const Scalar c1 = Scalar(1) - std::pow(beta1, Scalar(step));
        const Scalar c2 = Scalar(1) - std::pow(beta2, Scalar(step));
        params -= (lr * (m / c1).array() / ((v / c2).array().sqrt() + eps)).matrix();
    }
};

template <typename Scalar>
AdamState<Scalar> make_adam(const Mlp<Scalar>& net, Scalar lr)
{
    return AdamState<Scalar>(net.parameter_count(), lr);
}

} // namespace chdrl
