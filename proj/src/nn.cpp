#include "newsmon/nn.hpp"

#include "newsmon/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace newsmon::nn {

Param::Param(std::string n, Matrix init, bool l2)
    : name(std::move(n)), value(std::move(init)), grad(Matrix::Zero(value.rows(), value.cols())),
      m(Matrix::Zero(value.rows(), value.cols())), v(Matrix::Zero(value.rows(), value.cols())), decay(l2) {}

Eigen::Index Flow::batch() const {
    if (sequential) {
        return seq.empty() ? static_cast<Eigen::Index>(lengths.size()) : seq.front().rows();
    }
    return flat.rows();
}

Eigen::Index Flow::width() const {
    if (sequential) {
        return seq.empty() ? 0 : seq.front().cols();
    }
    return flat.cols();
}

Matrix uniform(Eigen::Index rows, Eigen::Index cols, double limit, CounterRng& rng) {
    Matrix m(rows, cols);
    // Column-major fill order is part of the seeded contract.
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) {
            m(r, c) = rng.uniform(-limit, limit);
        }
    }
    return m;
}

Matrix glorot(Eigen::Index rows, Eigen::Index cols, double fan_in, double fan_out, CounterRng& rng) {
    return uniform(rows, cols, std::sqrt(6.0 / (fan_in + fan_out)), rng);
}

namespace {

void require_sequential(const Flow& in, const char* layer) {
    if (!in.sequential) {
        throw UsageError(fmt::format("{} expects a sequence input", layer));
    }
}

void require_flat(const Flow& in, const char* layer) {
    if (in.sequential) {
        throw UsageError(fmt::format("{} expects a flat input", layer));
    }
}

Eigen::ArrayXd step_mask(const std::vector<int>& lengths, Eigen::Index t) {
    Eigen::ArrayXd m(static_cast<Eigen::Index>(lengths.size()));
    for (std::size_t b = 0; b < lengths.size(); ++b) {
        m(static_cast<Eigen::Index>(b)) = t < lengths[b] ? 1.0 : 0.0;
    }
    return m;
}

Matrix sigmoid(const Matrix& z) {
    return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

Matrix relu(const Matrix& z) {
    return z.cwiseMax(0.0);
}

} // namespace

// -- embedding ---------------------------------------------------------------------

Embedding::Embedding(Eigen::Index vocab, Eigen::Index dim, CounterRng& rng)
    : table_("embedding", uniform(vocab, dim, 0.05, rng), false) {
    table_.value.row(0).setZero();
}

Flow Embedding::forward(const Eigen::MatrixXi& ids, const std::vector<int>& lengths) {
    const auto B = ids.rows();
    const auto T = ids.cols();
    const auto V = table_.value.rows();
    if (static_cast<std::size_t>(B) != lengths.size()) {
        throw UsageError("embedding: lengths do not match the batch");
    }
    for (Eigen::Index b = 0; b < B; ++b) {
        for (Eigen::Index t = 0; t < T; ++t) {
            if (ids(b, t) < 0 || ids(b, t) >= V) {
                throw DataError(fmt::format("token id {} outside embedding table of {}", ids(b, t), V));
            }
        }
    }
    ids_ = ids;
    Flow out;
    out.sequential = true;
    out.lengths = lengths;
    out.seq.assign(static_cast<std::size_t>(T), Matrix::Zero(B, table_.value.cols()));
    for (Eigen::Index t = 0; t < T; ++t) {
        for (Eigen::Index b = 0; b < B; ++b) {
            if (t < lengths[static_cast<std::size_t>(b)] && ids(b, t) != 0) {
                out.seq[static_cast<std::size_t>(t)].row(b) = table_.value.row(ids(b, t));
            }
        }
    }
    return out;
}

void Embedding::backward(const Flow& grad_out) {
    for (Eigen::Index t = 0; t < ids_.cols(); ++t) {
        for (Eigen::Index b = 0; b < ids_.rows(); ++b) {
            int id = ids_(b, t);
            if (id != 0 && t < grad_out.lengths[static_cast<std::size_t>(b)]) {
                table_.grad.row(id) += grad_out.seq[static_cast<std::size_t>(t)].row(b);
            }
        }
    }
}

// -- conv ----------------------------------------------------------------------------

Conv1D::Conv1D(Eigen::Index input, Eigen::Index filters, int width, CounterRng& rng, bool relu)
    : weight_("conv.weight", glorot(width * input, filters, static_cast<double>(width * input),
                                    static_cast<double>(width * filters), rng),
              true),
      bias_("conv.bias", Matrix::Zero(1, filters), false), width_(width), relu_(relu) {
    if (width < 1) {
        throw UsageError("convolution width must be positive");
    }
}

Flow Conv1D::forward(const Flow& in, bool) {
    require_sequential(in, "conv1d");
    const auto T = static_cast<Eigen::Index>(in.seq.size());
    const auto D = in.width();
    const auto B = in.batch();
    const auto F = weight_.value.cols();
    if (D * width_ != weight_.value.rows()) {
        throw UsageError(fmt::format("conv1d expects {} input channels, got {}", weight_.value.rows() / width_, D));
    }
    if (T < width_) {
        throw DataError(fmt::format("sequence of {} steps is shorter than the kernel width {}", T, width_));
    }
    in_ = in;
    const auto steps = T - width_ + 1;
    out_lengths_.resize(in.lengths.size());
    int active = 0;
    for (std::size_t b = 0; b < in.lengths.size(); ++b) {
        out_lengths_[b] = std::max(in.lengths[b] - width_ + 1, 0);
        active = std::max(active, out_lengths_[b]);
    }
    Flow out;
    out.sequential = true;
    out.lengths = out_lengths_;
    out.seq.assign(static_cast<std::size_t>(steps), Matrix::Zero(B, F));
    pre_.assign(static_cast<std::size_t>(steps), Matrix::Zero(B, F));
    for (Eigen::Index t = 0; t < active; ++t) {
        Matrix z = bias_.value.replicate(B, 1);
        for (int j = 0; j < width_; ++j) {
            z.noalias() += in.seq[static_cast<std::size_t>(t + j)] * weight_.value.middleRows(j * D, D);
        }
        auto mask = step_mask(out_lengths_, t);
        z.array().colwise() *= mask;
        pre_[static_cast<std::size_t>(t)] = z;
        out.seq[static_cast<std::size_t>(t)] = relu_ ? relu(z) : z;
    }
    return out;
}

Flow Conv1D::backward(const Flow& grad_out) {
    const auto D = in_.width();
    Flow din;
    din.sequential = true;
    din.lengths = in_.lengths;
    din.seq.assign(in_.seq.size(), Matrix::Zero(in_.batch(), D));
    for (std::size_t t = 0; t < pre_.size(); ++t) {
        Matrix dz = grad_out.seq[t];
        if (relu_) {
            dz.array() *= (pre_[t].array() > 0.0).cast<double>();
        }
        dz.array().colwise() *= step_mask(out_lengths_, static_cast<Eigen::Index>(t));
        if (dz.isZero(0.0)) {
            continue;
        }
        bias_.grad += dz.colwise().sum();
        for (int j = 0; j < width_; ++j) {
            weight_.grad.middleRows(j * D, D).noalias() += in_.seq[t + static_cast<std::size_t>(j)].transpose() * dz;
            din.seq[t + static_cast<std::size_t>(j)].noalias() += dz * weight_.value.middleRows(j * D, D).transpose();
        }
    }
    return din;
}

// -- pooling ---------------------------------------------------------------------------

Flow MaxPool1D::forward(const Flow& in, bool) {
    require_sequential(in, "maxpool1d");
    const auto T = static_cast<Eigen::Index>(in.seq.size());
    const auto B = in.batch();
    const auto D = in.width();
    const auto S = static_cast<Eigen::Index>(size_);
    const auto steps = (T + S - 1) / S;
    steps_in_ = T;
    width_ = D;
    Flow out;
    out.sequential = true;
    out.lengths.resize(in.lengths.size());
    for (std::size_t b = 0; b < in.lengths.size(); ++b) {
        out.lengths[b] = (in.lengths[b] + size_ - 1) / size_;
    }
    out.seq.assign(static_cast<std::size_t>(steps), Matrix::Zero(B, D));
    argmax_.assign(static_cast<std::size_t>(steps), Eigen::MatrixXi::Constant(B, D, -1));
    for (Eigen::Index p = 0; p < steps; ++p) {
        auto& o = out.seq[static_cast<std::size_t>(p)];
        auto& arg = argmax_[static_cast<std::size_t>(p)];
        for (Eigen::Index b = 0; b < B; ++b) {
            const Eigen::Index len = in.lengths[static_cast<std::size_t>(b)];
            const Eigen::Index first = p * S;
            if (first >= len) {
                continue;
            }
            const Eigen::Index last = std::min({first + S, len, T});
            for (Eigen::Index d = 0; d < D; ++d) {
                Eigen::Index best = first;
                for (Eigen::Index s = first + 1; s < last; ++s) {
                    if (in.seq[static_cast<std::size_t>(s)](b, d) > in.seq[static_cast<std::size_t>(best)](b, d)) {
                        best = s;
                    }
                }
                o(b, d) = in.seq[static_cast<std::size_t>(best)](b, d);
                arg(b, d) = static_cast<int>(best);
            }
        }
    }
    return out;
}

Flow MaxPool1D::backward(const Flow& grad_out) {
    Flow din;
    din.sequential = true;
    const auto B = grad_out.batch();
    din.seq.assign(static_cast<std::size_t>(steps_in_), Matrix::Zero(B, width_));
    for (std::size_t p = 0; p < argmax_.size(); ++p) {
        const auto& arg = argmax_[p];
        for (Eigen::Index b = 0; b < B; ++b) {
            for (Eigen::Index d = 0; d < width_; ++d) {
                if (arg(b, d) >= 0) {
                    din.seq[static_cast<std::size_t>(arg(b, d))](b, d) += grad_out.seq[p](b, d);
                }
            }
        }
    }
    return din;
}

// -- LSTM --------------------------------------------------------------------------------

Lstm::Lstm(Eigen::Index input, Eigen::Index hidden, bool return_sequences, bool reverse, CounterRng& rng)
    : input_(input), hidden_(hidden), sequences_(return_sequences), reverse_(reverse) {
    const std::string prefix = reverse ? "lstm_bwd." : "lstm.";
    w_ = Param(prefix + "w", glorot(input, 4 * hidden, static_cast<double>(input), static_cast<double>(4 * hidden), rng),
               true);
    u_ = Param(prefix + "u", uniform(hidden, 4 * hidden, 1.0 / std::sqrt(static_cast<double>(hidden)), rng), true);
    Matrix bias = Matrix::Zero(1, 4 * hidden);
    bias.middleCols(hidden, hidden).setOnes();  // forget gate
    b_ = Param(prefix + "b", bias, false);
}

Flow Lstm::forward(const Flow& in, bool) {
    require_sequential(in, "lstm");
    if (in.width() != input_ && !in.seq.empty()) {
        throw UsageError(fmt::format("lstm expects {} input features, got {}", input_, in.width()));
    }
    const auto T = static_cast<Eigen::Index>(in.seq.size());
    const auto B = in.batch();
    const auto H = hidden_;
    steps_in_ = T;
    batch_ = B;
    lengths_ = in.lengths;
    int active = 0;
    for (int len : in.lengths) {
        active = std::max(active, std::min(len, static_cast<int>(T)));
    }
    Matrix h = Matrix::Zero(B, H);
    Matrix c = Matrix::Zero(B, H);
    Flow out;
    out.lengths = in.lengths;
    if (sequences_) {
        out.sequential = true;
        out.seq.assign(static_cast<std::size_t>(T), Matrix::Zero(B, H));
    }
    steps_.clear();
    steps_.reserve(static_cast<std::size_t>(active));
    for (Eigen::Index k = 0; k < active; ++k) {
        const Eigen::Index t = reverse_ ? active - 1 - k : k;
        Step s;
        s.t = t;
        s.mask = step_mask(in.lengths, t);
        s.x = in.seq[static_cast<std::size_t>(t)];
        s.h_prev = h;
        s.c_prev = c;
        Matrix z = s.x * w_.value + h * u_.value;
        z.rowwise() += b_.value.row(0);
        s.i = sigmoid(z.middleCols(0, H));
        s.f = sigmoid(z.middleCols(H, H));
        s.g = z.middleCols(2 * H, H).array().tanh().matrix();
        s.o = sigmoid(z.middleCols(3 * H, H));
        s.c = (s.f.array() * c.array() + s.i.array() * s.g.array()).matrix();
        s.tanh_c = s.c.array().tanh().matrix();
        Matrix h_new = (s.o.array() * s.tanh_c.array()).matrix();
        const Eigen::ArrayXd keep = 1.0 - s.mask;
        h = (h_new.array().colwise() * s.mask + h.array().colwise() * keep).matrix();
        c = (s.c.array().colwise() * s.mask + c.array().colwise() * keep).matrix();
        if (sequences_) {
            out.seq[static_cast<std::size_t>(t)] = (h_new.array().colwise() * s.mask).matrix();
        }
        steps_.push_back(std::move(s));
    }
    if (!sequences_) {
        out.flat = h;
    }
    return out;
}

Flow Lstm::backward(const Flow& grad_out) {
    const auto H = hidden_;
    const auto B = batch_;
    Matrix dh = sequences_ ? Matrix::Zero(B, H) : grad_out.flat;
    Matrix dc = Matrix::Zero(B, H);
    Flow din;
    din.sequential = true;
    din.lengths = lengths_;
    din.seq.assign(static_cast<std::size_t>(steps_in_), Matrix::Zero(B, input_));
    Matrix dz(B, 4 * H);
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) {
        const Step& s = *it;
        if (sequences_) {
            dh += (grad_out.seq[static_cast<std::size_t>(s.t)].array().colwise() * s.mask).matrix();
        }
        const Eigen::ArrayXd keep = 1.0 - s.mask;
        Eigen::ArrayXXd dh_new = dh.array().colwise() * s.mask;
        Eigen::ArrayXXd dct =
            dc.array().colwise() * s.mask + dh_new * s.o.array() * (1.0 - s.tanh_c.array().square());
        Eigen::ArrayXXd d_o = dh_new * s.tanh_c.array();
        dz.middleCols(0, H) = (dct * s.g.array() * s.i.array() * (1.0 - s.i.array())).matrix();
        dz.middleCols(H, H) = (dct * s.c_prev.array() * s.f.array() * (1.0 - s.f.array())).matrix();
        dz.middleCols(2 * H, H) = (dct * s.i.array() * (1.0 - s.g.array().square())).matrix();
        dz.middleCols(3 * H, H) = (d_o * s.o.array() * (1.0 - s.o.array())).matrix();
        w_.grad.noalias() += s.x.transpose() * dz;
        u_.grad.noalias() += s.h_prev.transpose() * dz;
        b_.grad += dz.colwise().sum();
        din.seq[static_cast<std::size_t>(s.t)].noalias() = dz * w_.value.transpose();
        Matrix dh_prev = dz * u_.value.transpose();
        dh_prev += (dh.array().colwise() * keep).matrix();
        dc = (dct * s.f.array()).matrix() + (dc.array().colwise() * keep).matrix();
        dh = std::move(dh_prev);
    }
    return din;
}

BiLstm::BiLstm(Eigen::Index input, Eigen::Index hidden, bool return_sequences, CounterRng& rng)
    : fwd_(input, hidden, return_sequences, false, rng), bwd_(input, hidden, return_sequences, true, rng),
      hidden_(hidden) {}

std::vector<Param*> BiLstm::params() {
    auto p = fwd_.params();
    auto q = bwd_.params();
    p.insert(p.end(), q.begin(), q.end());
    return p;
}

Flow BiLstm::forward(const Flow& in, bool training) {
    Flow f = fwd_.forward(in, training);
    Flow b = bwd_.forward(in, training);
    Flow out;
    out.lengths = in.lengths;
    out.sequential = f.sequential;
    if (f.sequential) {
        out.seq.resize(f.seq.size());
        for (std::size_t t = 0; t < f.seq.size(); ++t) {
            out.seq[t].resize(f.seq[t].rows(), 2 * hidden_);
            out.seq[t] << f.seq[t], b.seq[t];
        }
    } else {
        out.flat.resize(f.flat.rows(), 2 * hidden_);
        out.flat << f.flat, b.flat;
    }
    return out;
}

Flow BiLstm::backward(const Flow& grad_out) {
    Flow gf, gb;
    gf.sequential = gb.sequential = grad_out.sequential;
    gf.lengths = gb.lengths = grad_out.lengths;
    if (grad_out.sequential) {
        for (const auto& g : grad_out.seq) {
            gf.seq.push_back(g.leftCols(hidden_));
            gb.seq.push_back(g.rightCols(hidden_));
        }
    } else {
        gf.flat = grad_out.flat.leftCols(hidden_);
        gb.flat = grad_out.flat.rightCols(hidden_);
    }
    Flow a = fwd_.backward(gf);
    Flow b = bwd_.backward(gb);
    for (std::size_t t = 0; t < a.seq.size(); ++t) {
        a.seq[t] += b.seq[t];
    }
    return a;
}

// -- dropout, dense ------------------------------------------------------------------------

Dropout::Dropout(double rate, std::uint64_t seed) : rate_(rate), rng_(seed, 0xD409) {
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw UsageError(fmt::format("dropout rate must be in [0, 1), got {}", rate));
    }
}

namespace {

Matrix keep_mask(Eigen::Index rows, Eigen::Index cols, double rate, CounterRng& rng) {
    Matrix m(rows, cols);
    const double scale = 1.0 / (1.0 - rate);
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) {
            m(r, c) = rng.uniform() >= rate ? scale : 0.0;
        }
    }
    return m;
}

} // namespace

Flow Dropout::forward(const Flow& in, bool training) {
    active_ = training && rate_ > 0.0;
    if (!active_) {
        return in;
    }
    Flow out = in;
    if (in.sequential) {
        seq_masks_.clear();
        for (auto& step : out.seq) {
            seq_masks_.push_back(keep_mask(step.rows(), step.cols(), rate_, rng_));
            step.array() *= seq_masks_.back().array();
        }
    } else {
        flat_mask_ = keep_mask(in.flat.rows(), in.flat.cols(), rate_, rng_);
        out.flat.array() *= flat_mask_.array();
    }
    return out;
}

Flow Dropout::backward(const Flow& grad_out) {
    if (!active_) {
        return grad_out;
    }
    Flow g = grad_out;
    if (g.sequential) {
        for (std::size_t t = 0; t < g.seq.size(); ++t) {
            g.seq[t].array() *= seq_masks_[t].array();
        }
    } else {
        g.flat.array() *= flat_mask_.array();
    }
    return g;
}

Dense::Dense(Eigen::Index input, Eigen::Index output, bool relu, CounterRng& rng)
    : weight_("dense.weight", glorot(input, output, static_cast<double>(input), static_cast<double>(output), rng), true),
      bias_("dense.bias", Matrix::Zero(1, output), false), relu_(relu) {}

Flow Dense::forward(const Flow& in, bool) {
    require_flat(in, "dense");
    if (in.flat.cols() != weight_.value.rows()) {
        throw UsageError(fmt::format("dense expects {} inputs, got {}", weight_.value.rows(), in.flat.cols()));
    }
    in_ = in.flat;
    pre_ = in.flat * weight_.value;
    pre_.rowwise() += bias_.value.row(0);
    Flow out;
    out.flat = relu_ ? relu(pre_) : pre_;
    return out;
}

Flow Dense::backward(const Flow& grad_out) {
    Matrix d = grad_out.flat;
    if (relu_) {
        d.array() *= (pre_.array() > 0.0).cast<double>();
    }
    weight_.grad.noalias() += in_.transpose() * d;
    bias_.grad += d.colwise().sum();
    Flow din;
    din.flat = d * weight_.value.transpose();
    return din;
}

// -- loss, optimizer -----------------------------------------------------------------------

Matrix softmax(const Matrix& logits) {
    Matrix p = logits;
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
        p.row(r).array() -= p.row(r).maxCoeff();
        p.row(r) = p.row(r).array().exp().matrix();
        p.row(r) /= p.row(r).sum();
    }
    return p;
}

double cross_entropy(const Matrix& probs, const std::vector<int>& labels, Matrix* grad) {
    const auto B = probs.rows();
    if (static_cast<std::size_t>(B) != labels.size() || B == 0) {
        throw UsageError("cross_entropy: label count does not match the batch");
    }
    double loss = 0.0;
    for (Eigen::Index b = 0; b < B; ++b) {
        int y = labels[static_cast<std::size_t>(b)];
        if (y < 0 || y >= probs.cols()) {
            throw DataError(fmt::format("label {} outside {} classes", y, probs.cols()));
        }
        loss -= std::log(std::max(probs(b, y), 1e-300));
    }
    if (grad) {
        *grad = probs;
        for (Eigen::Index b = 0; b < B; ++b) {
            (*grad)(b, labels[static_cast<std::size_t>(b)]) -= 1.0;
        }
        *grad /= static_cast<double>(B);
    }
    return loss / static_cast<double>(B);
}

void Adam::step(const std::vector<Param*>& params) {
    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (Param* p : params) {
        p->m = config_.beta1 * p->m + (1.0 - config_.beta1) * p->grad;
        p->v = config_.beta2 * p->v + (1.0 - config_.beta2) * p->grad.cwiseProduct(p->grad);
        p->value.array() -=
            config_.learning_rate * (p->m.array() / c1) / ((p->v.array() / c2).sqrt() + config_.epsilon);
    }
}

// -- single-sequence forms ------------------------------------------------------------------

Matrix embed(const std::vector<int>& ids, const Matrix& table, int pad_id) {
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(ids.size()), table.cols());
    for (std::size_t t = 0; t < ids.size(); ++t) {
        if (ids[t] < 0 || ids[t] >= table.rows()) {
            throw DataError(fmt::format("token id {} outside embedding table of {}", ids[t], table.rows()));
        }
        if (ids[t] != pad_id) {
            out.row(static_cast<Eigen::Index>(t)) = table.row(ids[t]);
        }
    }
    return out;
}

Matrix conv1d_forward(const Matrix& input, const Matrix& weight, const Eigen::RowVectorXd& bias, int width, bool relu_out) {
    const auto T = input.rows();
    const auto D = input.cols();
    if (weight.rows() != width * D || bias.size() != weight.cols()) {
        throw UsageError("conv1d weight shape does not match the input");
    }
    if (T < width) {
        throw DataError(fmt::format("sequence of {} steps is shorter than the kernel width {}", T, width));
    }
    Matrix out(T - width + 1, weight.cols());
    for (Eigen::Index t = 0; t + width <= T; ++t) {
        Eigen::RowVectorXd z = bias;
        for (int j = 0; j < width; ++j) {
            z += input.row(t + j) * weight.middleRows(j * D, D);
        }
        out.row(t) = relu_out ? z.cwiseMax(0.0) : z;
    }
    return out;
}

Matrix lstm_forward(const Matrix& input, const LstmWeights& p, bool reverse) {
    const auto H = p.u.rows();
    if (p.w.rows() != input.cols() || p.w.cols() != 4 * H || p.u.cols() != 4 * H || p.b.size() != 4 * H) {
        throw UsageError("LSTM parameter shapes do not match the input");
    }
    const auto T = input.rows();
    Matrix out(T, H);
    Eigen::RowVectorXd h = Eigen::RowVectorXd::Zero(H);
    Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(H);
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    for (Eigen::Index k = 0; k < T; ++k) {
        const Eigen::Index t = reverse ? T - 1 - k : k;
        Eigen::RowVectorXd z = input.row(t) * p.w + h * p.u + p.b;
        for (Eigen::Index j = 0; j < H; ++j) {
            double i = sig(z(j));
            double f = sig(z(H + j));
            double g = std::tanh(z(2 * H + j));
            double o = sig(z(3 * H + j));
            c(j) = f * c(j) + i * g;
            h(j) = o * std::tanh(c(j));
        }
        out.row(t) = h;
    }
    return out;
}

Matrix bilstm_forward(const Matrix& input, const LstmWeights& fwd, const LstmWeights& bwd) {
    Matrix f = lstm_forward(input, fwd, false);
    Matrix b = lstm_forward(input, bwd, true);
    Matrix out(input.rows(), f.cols() + b.cols());
    out << f, b;
    return out;
}

GradCheckResult grad_check(const std::vector<Param*>& params, const std::function<double(bool)>& evaluate,
                           double epsilon) {
    evaluate(true);
    std::vector<Matrix> analytic;
    for (Param* p : params) {
        analytic.push_back(p->grad);
    }
    GradCheckResult result;
    auto ratio = [](double diff, double a, double n) { return diff / std::max({a, n, 1e-8}); };
    for (std::size_t k = 0; k < params.size(); ++k) {
        Param& p = *params[k];
        Matrix numeric(p.value.rows(), p.value.cols());
        for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
            for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
                const double original = p.value(r, c);
                p.value(r, c) = original + epsilon;
                const double up = evaluate(false);
                p.value(r, c) = original - epsilon;
                const double down = evaluate(false);
                p.value(r, c) = original;
                numeric(r, c) = (up - down) / (2.0 * epsilon);
                const double a = analytic[k](r, c);
                const double rel = ratio(std::abs(a - numeric(r, c)), std::abs(a), std::abs(numeric(r, c)));
                ++result.checked;
                if (rel > result.max_entry_error) {
                    result.max_entry_error = rel;
                    result.worst_entry = fmt::format("{}#{}({},{})", p.name, k, r, c);
                }
            }
        }
        const double rel = ratio((analytic[k] - numeric).norm(), analytic[k].norm(), numeric.norm());
        if (rel > result.max_relative_error) {
            result.max_relative_error = rel;
            result.worst_param = fmt::format("{}#{}", p.name, k);
        }
    }
    return result;
}

} // namespace newsmon::nn
