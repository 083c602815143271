#pragma once

// Layer primitives for the text networks. Everything is double precision and
// batch-major: a sequence is one B x D matrix per time step, pads sit at the
// end of each row's sequence, and `lengths` carries the valid step count per
// row. Masked steps produce zero outputs and receive no gradient.

#include "newsmon/rng.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace newsmon::nn {

using Matrix = Eigen::MatrixXd;
using Seq = std::vector<Matrix>;

struct Param {
    std::string name;
    Matrix value;
    Matrix grad;
    Matrix m;  // Adam first moment
    Matrix v;  // Adam second moment
    bool decay = false;  // subject to L2

    Param() = default;
    Param(std::string n, Matrix init, bool l2);
    void zero_grad() { grad.setZero(); }
};

/// Activations between layers: either a sequence with per-row lengths or a
/// flat B x D matrix.
struct Flow {
    bool sequential = false;
    Seq seq;
    Matrix flat;
    std::vector<int> lengths;

    Eigen::Index batch() const;
    Eigen::Index width() const;
};

class Layer {
public:
    virtual ~Layer() = default;
    virtual Flow forward(const Flow& in, bool training) = 0;
    /// Gradient with respect to the layer input; accumulates parameter grads.
    virtual Flow backward(const Flow& grad_out) = 0;
    virtual std::vector<Param*> params() { return {}; }
    virtual std::string kind() const = 0;
};

/// Glorot-uniform: U(-l, l) with l = sqrt(6 / (fan_in + fan_out)).
Matrix glorot(Eigen::Index rows, Eigen::Index cols, double fan_in, double fan_out, CounterRng& rng);
Matrix uniform(Eigen::Index rows, Eigen::Index cols, double limit, CounterRng& rng);

/// Row lookup; id 0 (pad) yields a zero row and never receives gradient.
class Embedding {
public:
    Embedding(Eigen::Index vocab, Eigen::Index dim, CounterRng& rng);

    /// ids: B x T. Throws DataError on ids outside [0, vocab).
    Flow forward(const Eigen::MatrixXi& ids, const std::vector<int>& lengths);
    void backward(const Flow& grad_out);
    Param& table() { return table_; }
    const Param& table() const { return table_; }

private:
    Param table_;
    Eigen::MatrixXi ids_;
};

/// Valid cross-correlation along time with `filters` kernels of width w,
/// then ReLU. Output step t is valid when its whole window is valid.
class Conv1D : public Layer {
public:
    Conv1D(Eigen::Index input, Eigen::Index filters, int width, CounterRng& rng, bool relu = true);
    Flow forward(const Flow& in, bool training) override;
    Flow backward(const Flow& grad_out) override;
    std::vector<Param*> params() override { return {&weight_, &bias_}; }
    std::string kind() const override { return "conv1d"; }
    Param& weight() { return weight_; }  // (width * input) x filters; block j multiplies step t + j
    Param& bias() { return bias_; }

private:
    Param weight_;
    Param bias_;
    int width_;
    bool relu_;
    Flow in_;
    Seq pre_;
    std::vector<int> out_lengths_;
};

/// Non-overlapping max over `size` steps. An output step is valid when its
/// first member is valid; the max runs over valid members only.
class MaxPool1D : public Layer {
public:
    explicit MaxPool1D(int size) : size_(size) {}
    Flow forward(const Flow& in, bool training) override;
    Flow backward(const Flow& grad_out) override;
    std::string kind() const override { return "maxpool1d"; }

private:
    int size_;
    Eigen::Index steps_in_ = 0;
    Eigen::Index width_ = 0;
    std::vector<Eigen::MatrixXi> argmax_;  // per output step, B x D source step (-1 masked)
};

/// Standard LSTM, gates ordered [input, forget, cell, output]:
///   z = x W + h U + b; i, f, o = sigmoid; g = tanh; c' = f c + i g; h' = o tanh(c').
/// `reverse` runs from the last valid step to the first. Masked steps leave
/// (h, c) unchanged. With return_sequences the output is h per step,
/// otherwise the final state.
class Lstm : public Layer {
public:
    Lstm(Eigen::Index input, Eigen::Index hidden, bool return_sequences, bool reverse, CounterRng& rng);
    Flow forward(const Flow& in, bool training) override;
    Flow backward(const Flow& grad_out) override;
    std::vector<Param*> params() override { return {&w_, &u_, &b_}; }
    std::string kind() const override { return reverse_ ? "lstm_backward" : "lstm"; }
    Eigen::Index hidden() const { return hidden_; }
    Param& w() { return w_; }
    Param& u() { return u_; }
    Param& b() { return b_; }

private:
    struct Step {
        Eigen::Index t;
        Eigen::ArrayXd mask;
        Matrix x, h_prev, c_prev, i, f, g, o, c, tanh_c;
    };
    Eigen::Index input_;
    Eigen::Index hidden_;
    bool sequences_;
    bool reverse_;
    Param w_, u_, b_;
    std::vector<Step> steps_;
    Eigen::Index steps_in_ = 0;
    Eigen::Index batch_ = 0;
    std::vector<int> lengths_;
};

/// Forward and backward LSTMs, outputs concatenated [forward, backward].
class BiLstm : public Layer {
public:
    BiLstm(Eigen::Index input, Eigen::Index hidden, bool return_sequences, CounterRng& rng);
    Flow forward(const Flow& in, bool training) override;
    Flow backward(const Flow& grad_out) override;
    std::vector<Param*> params() override;
    std::string kind() const override { return "bilstm"; }
    Lstm& forward_lstm() { return fwd_; }
    Lstm& backward_lstm() { return bwd_; }

private:
    Lstm fwd_;
    Lstm bwd_;
    Eigen::Index hidden_;
};

/// Inverted dropout; identity outside training.
class Dropout : public Layer {
public:
    Dropout(double rate, std::uint64_t seed);
    Flow forward(const Flow& in, bool training) override;
    Flow backward(const Flow& grad_out) override;
    std::string kind() const override { return "dropout"; }

private:
    double rate_;
    CounterRng rng_;
    bool active_ = false;
    Seq seq_masks_;
    Matrix flat_mask_;
};

class Dense : public Layer {
public:
    Dense(Eigen::Index input, Eigen::Index output, bool relu, CounterRng& rng);
    Flow forward(const Flow& in, bool training) override;
    Flow backward(const Flow& grad_out) override;
    std::vector<Param*> params() override { return {&weight_, &bias_}; }
    std::string kind() const override { return relu_ ? "dense_relu" : "dense"; }
    Param& weight() { return weight_; }
    Param& bias() { return bias_; }

private:
    Param weight_;
    Param bias_;
    bool relu_;
    Matrix in_;
    Matrix pre_;
};

/// Row-wise softmax (max-shifted).
Matrix softmax(const Matrix& logits);
/// Mean categorical cross-entropy of `labels` under `probs`; writes
/// d loss / d logits into `grad` when non-null.
double cross_entropy(const Matrix& probs, const std::vector<int>& labels, Matrix* grad = nullptr);

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

class Adam {
public:
    explicit Adam(AdamConfig config) : config_(config) {}
    void step(const std::vector<Param*>& params);
    long steps() const { return t_; }

private:
    AdamConfig config_;
    long t_ = 0;
};

// Single-sequence conveniences (B = 1, no padding).

/// seq x dim lookup; pad ids give zero rows. Throws DataError on ids out of range.
Matrix embed(const std::vector<int>& ids, const Matrix& table, int pad_id = 0);
/// Throws DataError when the sequence is shorter than the kernel.
Matrix conv1d_forward(const Matrix& input, const Matrix& weight, const Eigen::RowVectorXd& bias, int width,
                      bool relu = true);

struct LstmWeights {
    Matrix w;  // input x 4H
    Matrix u;  // H x 4H
    Eigen::RowVectorXd b;  // 4H
};

/// Hidden state per step (seq x H). Throws UsageError on shape mismatch.
Matrix lstm_forward(const Matrix& input, const LstmWeights& p, bool reverse = false);
/// seq x 2H, [forward, backward] per step.
Matrix bilstm_forward(const Matrix& input, const LstmWeights& fwd, const LstmWeights& bwd);

/// Central-difference check of every entry of `params`. `evaluate(true)` must
/// zero and fill the analytic gradients and return the loss; evaluate(false)
/// just returns the loss. Each parameter group scores
/// |a - n| / max(|a|, |n|, 1e-8) with Euclidean norms over the group; the
/// per-entry maximum of the same ratio is reported alongside, though it is
/// dominated by rounding noise once single gradients drop below ~1e-7.
struct GradCheckResult {
    double max_relative_error = 0.0;  // worst parameter group
    std::string worst_param;
    double max_entry_error = 0.0;  // worst single entry
    std::string worst_entry;
    std::size_t checked = 0;
};
GradCheckResult grad_check(const std::vector<Param*>& params, const std::function<double(bool)>& evaluate,
                           double epsilon = 1e-5);

} // namespace newsmon::nn
