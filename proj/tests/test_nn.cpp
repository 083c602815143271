#include "newsmon/error.hpp"
#include "newsmon/nn.hpp"

#include <doctest.h>

#include <cmath>

using namespace newsmon;
using namespace newsmon::nn;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, CounterRng& rng, double scale = 1.0) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = rng.uniform(-scale, scale);
    }
    return m;
}

/// Random batch sequence; steps past each row's length are zero.
Flow random_seq(Eigen::Index B, Eigen::Index T, Eigen::Index D, std::vector<int> lengths, CounterRng& rng) {
    Flow f;
    f.sequential = true;
    f.lengths = std::move(lengths);
    for (Eigen::Index t = 0; t < T; ++t) {
        Matrix m = random_matrix(B, D, rng);
        for (Eigen::Index b = 0; b < B; ++b) {
            if (t >= f.lengths[static_cast<std::size_t>(b)]) {
                m.row(b).setZero();
            }
        }
        f.seq.push_back(m);
    }
    return f;
}

/// One row of a batch sequence as a (len x D) matrix.
Matrix row_of(const Flow& f, Eigen::Index b, int len) {
    Matrix out(len, f.seq[0].cols());
    for (int t = 0; t < len; ++t) {
        out.row(t) = f.seq[static_cast<std::size_t>(t)].row(b);
    }
    return out;
}

double sigmoid(double z) {
    return 1.0 / (1.0 + std::exp(-z));
}

/// Runs a layer stack to a CE loss; used by the gradient checks.
struct Stack {
    std::vector<Layer*> layers;
    Flow input;
    std::vector<int> labels;

    double operator()(bool grads) {
        Flow f = input;
        for (auto* l : layers) {
            f = l->forward(f, false);
        }
        Matrix probs = softmax(f.flat);
        Matrix d;
        double loss = cross_entropy(probs, labels, grads ? &d : nullptr);
        if (grads) {
            for (auto* p : params()) {
                p->zero_grad();
            }
            Flow g;
            g.flat = d;
            for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
                g = (*it)->backward(g);
            }
        }
        return loss;
    }

    std::vector<Param*> params() {
        std::vector<Param*> out;
        for (auto* l : layers) {
            for (auto* p : l->params()) {
                out.push_back(p);
            }
        }
        return out;
    }

    GradCheckResult check() {
        return grad_check(params(), [this](bool g) { return (*this)(g); });
    }
};

} // namespace

TEST_CASE("embedding lookup") {
    Matrix table = Matrix::Identity(4, 4);
    table(0, 0) = 0.0;
    Matrix e = embed({2, 3, 1}, table);
    CHECK(e.row(0) == table.row(2));
    CHECK(e.row(2) == table.row(1));
    CounterRng fill(1);
    CHECK(embed({0, 0}, random_matrix(3, 5, fill)).isZero());
    CHECK_THROWS_AS(embed({4}, table), DataError);
    CHECK_THROWS_AS(embed({-1}, table), DataError);

    // The layer agrees and never moves the pad row.
    CounterRng rng(2);
    Embedding layer(5, 3, rng);
    CHECK(layer.table().value.row(0).isZero());
    CHECK(layer.table().value.maxCoeff() <= 0.05);
    Eigen::MatrixXi ids(2, 3);
    ids << 1, 4, 0, 0, 0, 0;
    Flow out = layer.forward(ids, {2, 0});
    CHECK(out.seq[1].row(0) == layer.table().value.row(4));
    CHECK(out.seq[0].row(1).isZero());
    Flow g = out;
    for (auto& m : g.seq) {
        m.setOnes();
    }
    layer.table().zero_grad();
    layer.backward(g);
    CHECK(layer.table().grad.row(0).isZero());
    CHECK(layer.table().grad(4, 0) == 1.0);
}

TEST_CASE("convolution oracles") {
    Matrix x(4, 2);
    x << 1, 2, 3, 4, 5, 6, 7, 8;
    // Kernel width 2 over 2 channels, one filter: weights per (step, channel).
    Matrix w(4, 1);
    w << 1, 0, 0, -1;  // x[t][0] - x[t+1][1]
    Eigen::RowVectorXd b(1);
    b << 10;
    Matrix y = conv1d_forward(x, w, b, 2);
    REQUIRE(y.rows() == 3);
    CHECK(y(0, 0) == 1 - 4 + 10);
    CHECK(y(1, 0) == 3 - 6 + 10);
    CHECK(y(2, 0) == 5 - 8 + 10);
    CHECK(conv1d_forward(x, w, -b, 2).isZero());  // ReLU clips the negatives

    CHECK(conv1d_forward(x, Matrix::Zero(6, 3), Eigen::RowVectorXd::Zero(3), 3).isZero());
    // A width-1 identity kernel copies the channel.
    Matrix copy = conv1d_forward(x, Matrix::Identity(2, 2), Eigen::RowVectorXd::Zero(2), 1);
    CHECK(copy == x);
    CHECK_THROWS_AS(conv1d_forward(x, Matrix::Zero(10, 1), Eigen::RowVectorXd::Zero(1), 5), DataError);
}

TEST_CASE("conv layer matches the single-sequence oracle and masks short rows") {
    CounterRng rng(3);
    Conv1D conv(3, 4, 3, rng);
    Flow in = random_seq(3, 6, 3, {6, 4, 2}, rng);
    Flow out = conv.forward(in, false);
    CHECK(out.seq.size() == 4);
    CHECK(out.lengths == std::vector<int>{4, 2, 0});
    for (Eigen::Index b = 0; b < 2; ++b) {
        int len = in.lengths[static_cast<std::size_t>(b)];
        Matrix ref = conv1d_forward(row_of(in, b, len), conv.weight().value, conv.bias().value.row(0), 3);
        Matrix got = row_of(out, b, out.lengths[static_cast<std::size_t>(b)]);
        CHECK((ref - got).cwiseAbs().maxCoeff() < 1e-14);
    }
    for (const auto& m : out.seq) {
        CHECK(m.row(2).isZero());
    }
}

TEST_CASE("max pooling") {
    Flow in;
    in.sequential = true;
    in.lengths = {5};
    for (double v : {1.0, 4.0, 2.0, 3.0, 7.0}) {
        in.seq.push_back(Matrix::Constant(1, 1, v));
    }
    MaxPool1D pool(2);
    Flow out = pool.forward(in, false);
    REQUIRE(out.seq.size() == 3);
    CHECK(out.lengths[0] == 3);
    CHECK(out.seq[0](0, 0) == 4.0);
    CHECK(out.seq[1](0, 0) == 3.0);
    CHECK(out.seq[2](0, 0) == 7.0);
    Flow g = out;
    for (auto& m : g.seq) {
        m.setOnes();
    }
    Flow back = pool.backward(g);
    CHECK(back.seq[0](0, 0) == 0.0);
    CHECK(back.seq[1](0, 0) == 1.0);
    CHECK(back.seq[3](0, 0) == 1.0);
    CHECK(back.seq[4](0, 0) == 1.0);
}

TEST_CASE("lstm oracles") {
    SUBCASE("zero parameters give zero output") {
        LstmWeights p{Matrix::Zero(3, 8), Matrix::Zero(2, 8), Eigen::RowVectorXd::Zero(8)};
        CounterRng rng(4);
        CHECK(lstm_forward(random_matrix(5, 3, rng), p).isZero());
        CHECK(bilstm_forward(random_matrix(5, 3, rng), p, p).isZero());
    }
    SUBCASE("one step by hand") {
        const double wi = 0.5, wf = -0.3, wg = 0.8, wo = 1.2, bi = 0.1, bo = -0.2, x = 0.7;
        LstmWeights p{Matrix(1, 4), Matrix::Zero(1, 4), Eigen::RowVectorXd(4)};
        p.w << wi, wf, wg, wo;
        p.b << bi, 1.0, 0.0, bo;
        Matrix in(1, 1);
        in << x;
        double i = sigmoid(wi * x + bi), g = std::tanh(wg * x), o = sigmoid(wo * x + bo);
        double h = o * std::tanh(i * g);
        CHECK(lstm_forward(in, p)(0, 0) == doctest::Approx(h).epsilon(1e-15));

        // Second step carries the state through the recurrent weight.
        p.u << 0.4, 0.0, -0.5, 0.3;
        Matrix two(2, 1);
        two << x, -x;
        double c1 = i * g;
        double h1 = h;
        double i2 = sigmoid(-wi * x + 0.4 * h1 + bi), f2 = sigmoid(-wf * x + 1.0);
        double g2 = std::tanh(-wg * x - 0.5 * h1), o2 = sigmoid(-wo * x + 0.3 * h1 + bo);
        double h2 = o2 * std::tanh(f2 * c1 + i2 * g2);
        CHECK(lstm_forward(two, p)(1, 0) == doctest::Approx(h2).epsilon(1e-15));
    }
    SUBCASE("reverse equals forward on the reversed sequence") {
        CounterRng rng(5);
        LstmWeights p{random_matrix(3, 8, rng), random_matrix(2, 8, rng), random_matrix(1, 8, rng).row(0)};
        Matrix x = random_matrix(6, 3, rng);
        Matrix rev = x.colwise().reverse();
        Matrix a = lstm_forward(x, p, true);
        Matrix b = lstm_forward(rev, p).colwise().reverse();
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-15);
    }
    SUBCASE("bilstm: width 2H and palindrome symmetry with tied weights") {
        CounterRng rng(6);
        LstmWeights p{random_matrix(2, 12, rng), random_matrix(3, 12, rng), random_matrix(1, 12, rng).row(0)};
        Matrix x(5, 2);
        x << 1, 2, 3, 4, 5, 6, 3, 4, 1, 2;
        Matrix y = bilstm_forward(x, p, p);
        REQUIRE(y.cols() == 6);
        for (Eigen::Index t = 0; t < 5; ++t) {
            CHECK((y.row(t).head(3) - y.row(4 - t).tail(3)).cwiseAbs().maxCoeff() < 1e-15);
        }
    }
}

TEST_CASE("lstm layer matches the oracle with ragged lengths") {
    for (bool reverse : {false, true}) {
        CounterRng rng(7);
        Lstm layer(3, 4, true, reverse, rng);
        CHECK(layer.b().value(0, 4) == 1.0);  // forget bias
        CHECK(layer.b().value(0, 0) == 0.0);
        Flow in = random_seq(3, 5, 3, {5, 3, 1}, rng);
        Flow out = layer.forward(in, false);
        LstmWeights p{layer.w().value, layer.u().value, layer.b().value.row(0)};
        for (Eigen::Index b = 0; b < 3; ++b) {
            int len = in.lengths[static_cast<std::size_t>(b)];
            Matrix ref = lstm_forward(row_of(in, b, len), p, reverse);
            CHECK((row_of(out, b, len) - ref).cwiseAbs().maxCoeff() < 1e-14);
            for (std::size_t t = static_cast<std::size_t>(len); t < out.seq.size(); ++t) {
                CHECK(out.seq[t].row(b).isZero());
            }
        }
        // Final-state mode returns the oracle's last meaningful output.
        CounterRng rng2(7);
        Lstm last(3, 4, false, reverse, rng2);
        Flow fin = last.forward(in, false);
        for (Eigen::Index b = 0; b < 3; ++b) {
            int len = in.lengths[static_cast<std::size_t>(b)];
            Matrix ref = lstm_forward(row_of(in, b, len), p, reverse);
            Eigen::Index at = reverse ? 0 : len - 1;
            CHECK((fin.flat.row(b) - ref.row(at)).cwiseAbs().maxCoeff() < 1e-14);
        }
    }
}

TEST_CASE("softmax and cross-entropy") {
    CounterRng rng(8);
    Matrix logits = random_matrix(6, 4, rng, 30.0);
    Matrix p = softmax(logits);
    for (Eigen::Index r = 0; r < 6; ++r) {
        CHECK(p.row(r).sum() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(p.row(r).minCoeff() >= 0.0);
    }
    Matrix delta = Matrix::Zero(2, 3);
    delta(0, 1) = 1.0;
    delta(1, 2) = 1.0;
    CHECK(cross_entropy(delta, {1, 2}) == 0.0);
    Matrix uniform = Matrix::Constant(1, 4, 0.25);
    CHECK(cross_entropy(uniform, {0}) == doctest::Approx(std::log(4.0)));
    CHECK_THROWS(cross_entropy(uniform, {4}));
}

TEST_CASE("adam: first step moves each weight by the learning rate") {
    Param p("w", Matrix::Zero(2, 2), false);
    p.grad << 3.0, -0.5, 1e-3, 0.0;
    Adam adam({0.01, 0.9, 0.999, 1e-8});
    adam.step({&p});
    CHECK(p.value(0, 0) == doctest::Approx(-0.01).epsilon(1e-6));
    CHECK(p.value(0, 1) == doctest::Approx(0.01).epsilon(1e-6));
    CHECK(p.value(1, 0) == doctest::Approx(-0.01).epsilon(1e-4));
    CHECK(p.value(1, 1) == 0.0);
    CHECK(adam.steps() == 1);
}

TEST_CASE("dropout") {
    Dropout d(0.5, 9);
    CounterRng rng(9);
    Flow in;
    in.flat = random_matrix(20, 30, rng);
    CHECK(d.forward(in, false).flat == in.flat);
    Flow out = d.forward(in, true);
    Eigen::Index zeros = 0;
    for (Eigen::Index i = 0; i < out.flat.size(); ++i) {
        double v = out.flat.data()[i];
        if (v == 0.0) {
            ++zeros;
        } else {
            CHECK(v == doctest::Approx(2.0 * in.flat.data()[i]));
        }
    }
    CHECK(zeros > 200);
    CHECK(zeros < 400);
}

TEST_CASE("gradient checks") {
    CounterRng rng(10);
    SUBCASE("dense + softmax + cross-entropy") {
        Dense hidden(5, 4, true, rng);
        Dense out(4, 3, false, rng);
        hidden.bias().value = random_matrix(1, 4, rng, 0.1);
        Stack s{{&hidden, &out}, {}, {0, 2, 1, 2}};
        s.input.flat = random_matrix(4, 5, rng);
        auto r = s.check();
        CHECK(r.checked == 5 * 4 + 4 + 4 * 3 + 3);
        CHECK(r.max_relative_error < 1e-6);
        CHECK(r.max_entry_error < 1e-6);
    }
    SUBCASE("conv + pool + lstm") {
        Conv1D conv(3, 4, 2, rng);
        conv.bias().value = random_matrix(1, 4, rng, 0.1);
        MaxPool1D pool(2);
        Lstm lstm(4, 3, false, false, rng);
        Dense out(3, 2, false, rng);
        Stack s{{&conv, &pool, &lstm, &out}, random_seq(3, 7, 3, {7, 5, 2}, rng), {0, 1, 1}};
        auto r = s.check();
        INFO(r.worst_entry);
        CHECK(r.max_relative_error < 1e-4);
        CHECK(r.max_entry_error < 1e-4);
    }
    SUBCASE("stacked bilstm") {
        BiLstm first(3, 3, true, rng);
        BiLstm second(6, 2, false, rng);
        Dense out(4, 3, false, rng);
        Stack s{{&first, &second, &out}, random_seq(3, 5, 3, {5, 3, 1}, rng), {2, 0, 1}};
        auto r = s.check();
        INFO(r.worst_entry);
        CHECK(r.max_relative_error < 1e-4);
        CHECK(r.max_entry_error < 1e-4);
    }
}
