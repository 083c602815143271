#include "newsmon/neural.hpp"

#include "newsmon/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace newsmon {

using nn::Matrix;

// -- spec -------------------------------------------------------------------------------

void NetSpec::validate() const {
    if (vocab_size < 2) {
        throw UsageError("network vocabulary must hold at least the pad and unknown ids");
    }
    if (embedding_dim < 1 || max_len < 1 || classes < 2 || batch_size < 1 || epochs < 0) {
        throw UsageError(fmt::format("invalid network sizes in '{}'", name));
    }
    if (conv_filters < 0 || (conv_filters > 0 && (conv_width < 1 || conv_width > max_len))) {
        throw UsageError("convolution width must be in [1, max_len]");
    }
    if (pool < 0 || pool == 1) {
        throw UsageError("pool size must be 0 (off) or at least 2");
    }
    if (recurrent.empty()) {
        throw UsageError("the network needs at least one recurrent layer");
    }
    for (const auto& r : recurrent) {
        if (r.hidden < 1) {
            throw UsageError("recurrent hidden size must be positive");
        }
        if (!(r.dropout >= 0.0 && r.dropout < 1.0)) {
            throw UsageError(fmt::format("dropout rate {} outside [0, 1)", r.dropout));
        }
    }
    for (int d : dense) {
        if (d < 1) {
            throw UsageError("dense layer sizes must be positive");
        }
    }
    if (l2 < 0.0 || adam.learning_rate < 0.0) {
        throw UsageError("L2 strength and learning rate must be non-negative");
    }
}

nlohmann::json to_json(const NetSpec& s) {
    nlohmann::json rec = nlohmann::json::array();
    for (const auto& r : s.recurrent) {
        rec.push_back({{"hidden", r.hidden}, {"bidirectional", r.bidirectional}, {"dropout", r.dropout}});
    }
    return {{"name", s.name},
            {"vocab_size", s.vocab_size},
            {"embedding_dim", s.embedding_dim},
            {"max_len", s.max_len},
            {"conv_filters", s.conv_filters},
            {"conv_width", s.conv_width},
            {"pool", s.pool},
            {"recurrent", rec},
            {"dense", s.dense},
            {"classes", s.classes},
            {"l2", s.l2},
            {"adam",
             {{"learning_rate", s.adam.learning_rate},
              {"beta1", s.adam.beta1},
              {"beta2", s.adam.beta2},
              {"epsilon", s.adam.epsilon}}},
            {"batch_size", s.batch_size},
            {"epochs", s.epochs},
            {"seed", s.seed}};
}

NetSpec net_spec_from_json(const nlohmann::json& j) {
    NetSpec s;
    s.name = j.at("name").get<std::string>();
    s.vocab_size = j.at("vocab_size").get<std::size_t>();
    s.embedding_dim = j.at("embedding_dim").get<int>();
    s.max_len = j.at("max_len").get<int>();
    s.conv_filters = j.at("conv_filters").get<int>();
    s.conv_width = j.at("conv_width").get<int>();
    s.pool = j.at("pool").get<int>();
    s.recurrent.clear();
    for (const auto& r : j.at("recurrent")) {
        s.recurrent.push_back({r.at("hidden").get<int>(), r.at("bidirectional").get<bool>(), r.at("dropout").get<double>()});
    }
    s.dense = j.at("dense").get<std::vector<int>>();
    s.classes = j.at("classes").get<int>();
    s.l2 = j.at("l2").get<double>();
    const auto& a = j.at("adam");
    s.adam = {a.at("learning_rate").get<double>(), a.at("beta1").get<double>(), a.at("beta2").get<double>(),
              a.at("epsilon").get<double>()};
    s.batch_size = j.at("batch_size").get<int>();
    s.epochs = j.at("epochs").get<int>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.validate();
    return s;
}

NetSpec classifier_spec(std::size_t vocab_size, int classes) {
    NetSpec s;
    s.name = "classifier";
    s.vocab_size = vocab_size;
    s.embedding_dim = 300;
    s.max_len = 1000;
    s.recurrent = {RecurrentSpec{100, false, 0.0}};
    s.classes = classes;
    s.l2 = 0.0;
    s.batch_size = 32;
    s.epochs = 5;
    return s;
}

NetSpec sentiment_spec(std::size_t vocab_size, int embedding_dim, int filters, int hidden, int dense) {
    NetSpec s;
    s.name = "sentiment";
    s.vocab_size = vocab_size;
    s.embedding_dim = embedding_dim;
    s.max_len = 200;
    s.conv_filters = filters;
    s.conv_width = 3;
    s.pool = 2;
    s.recurrent = {RecurrentSpec{hidden, true, 0.5}, RecurrentSpec{hidden, true, 0.5}};
    s.dense = {dense};
    s.classes = 2;
    s.l2 = 1e-4;
    s.batch_size = 256;
    s.epochs = 5;
    return s;
}

Batch make_batch(const std::vector<Example>& examples, const std::vector<std::size_t>& rows, int min_steps,
                 int max_steps) {
    Batch b;
    int steps = std::max(min_steps, 1);
    for (auto r : rows) {
        int len = static_cast<int>(examples[r].ids.size());
        if (max_steps > 0) {
            len = std::min(len, max_steps);
        }
        b.lengths.push_back(len);
        b.labels.push_back(examples[r].label);
        steps = std::max(steps, len);
    }
    b.ids = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(rows.size()), steps);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& ids = examples[rows[i]].ids;
        for (int t = 0; t < b.lengths[i]; ++t) {
            b.ids(static_cast<Eigen::Index>(i), t) = ids[static_cast<std::size_t>(t)];
        }
    }
    return b;
}

// -- network ----------------------------------------------------------------------------------

struct Network::Layers {
    std::unique_ptr<nn::Embedding> embedding;
    std::vector<std::unique_ptr<nn::Layer>> stack;
};

Network::Network(NetSpec spec) : spec_(std::move(spec)), layers_(std::make_unique<Layers>()) {
    spec_.validate();
    CounterRng init(spec_.seed, 0x1417);
    auto& L = *layers_;
    const auto V = static_cast<Eigen::Index>(spec_.vocab_size);
    L.embedding = std::make_unique<nn::Embedding>(V, spec_.embedding_dim, init);
    Eigen::Index width = spec_.embedding_dim;
    if (spec_.conv_filters > 0) {
        L.stack.push_back(std::make_unique<nn::Conv1D>(width, spec_.conv_filters, spec_.conv_width, init));
        width = spec_.conv_filters;
    }
    if (spec_.pool > 0) {
        L.stack.push_back(std::make_unique<nn::MaxPool1D>(spec_.pool));
    }
    std::uint64_t dropout_tag = 0;
    for (std::size_t r = 0; r < spec_.recurrent.size(); ++r) {
        const auto& rs = spec_.recurrent[r];
        const bool sequences = r + 1 < spec_.recurrent.size();
        if (rs.bidirectional) {
            L.stack.push_back(std::make_unique<nn::BiLstm>(width, rs.hidden, sequences, init));
            width = 2 * rs.hidden;
        } else {
            L.stack.push_back(std::make_unique<nn::Lstm>(width, rs.hidden, sequences, false, init));
            width = rs.hidden;
        }
        if (rs.dropout > 0.0) {
            L.stack.push_back(std::make_unique<nn::Dropout>(rs.dropout, derive_seed(spec_.seed, ++dropout_tag)));
        }
    }
    for (int d : spec_.dense) {
        L.stack.push_back(std::make_unique<nn::Dense>(width, d, true, init));
        width = d;
    }
    L.stack.push_back(std::make_unique<nn::Dense>(width, spec_.classes, false, init));
}

Network::Network(Network&&) noexcept = default;
Network& Network::operator=(Network&&) noexcept = default;
Network::~Network() = default;

std::vector<nn::Param*> Network::params() {
    std::vector<nn::Param*> out{&layers_->embedding->table()};
    for (auto& layer : layers_->stack) {
        for (auto* p : layer->params()) {
            out.push_back(p);
        }
    }
    return out;
}

nn::Param& Network::embedding() {
    return layers_->embedding->table();
}

void Network::set_embeddings(const Matrix& table) {
    auto& t = layers_->embedding->table();
    if (table.rows() != t.value.rows() || table.cols() != t.value.cols()) {
        throw DataError(fmt::format("embedding table is {}x{}, network expects {}x{}", table.rows(), table.cols(),
                                    t.value.rows(), t.value.cols()));
    }
    t.value = table;
    t.value.row(0).setZero();
}

Matrix Network::forward(const Batch& batch, bool training) {
    nn::Flow flow = layers_->embedding->forward(batch.ids, batch.lengths);
    for (auto& layer : layers_->stack) {
        flow = layer->forward(flow, training);
    }
    return nn::softmax(flow.flat);
}

double Network::loss(const Batch& batch, bool training, bool gradients) {
    Matrix probs = forward(batch, training);
    Matrix dlogits;
    double value = nn::cross_entropy(probs, batch.labels, gradients ? &dlogits : nullptr);
    auto ps = params();
    if (spec_.l2 > 0.0) {
        for (auto* p : ps) {
            if (p->decay) {
                value += spec_.l2 * p->value.squaredNorm();
            }
        }
    }
    if (!gradients) {
        return value;
    }
    for (auto* p : ps) {
        p->zero_grad();
    }
    nn::Flow grad;
    grad.flat = dlogits;
    for (auto it = layers_->stack.rbegin(); it != layers_->stack.rend(); ++it) {
        grad = (*it)->backward(grad);
    }
    layers_->embedding->backward(grad);
    if (spec_.l2 > 0.0) {
        for (auto* p : ps) {
            if (p->decay) {
                p->grad += 2.0 * spec_.l2 * p->value;
            }
        }
    }
    return value;
}

namespace {

int min_steps(const NetSpec& s) {
    return s.conv_filters > 0 ? s.conv_width : 1;
}

} // namespace

Prediction predict(Network& net, const std::vector<int>& ids) {
    std::vector<Example> one{Example{ids, 0}};
    auto batch = make_batch(one, {0}, min_steps(net.spec()), net.spec().max_len);
    Matrix probs = net.forward(batch, false);
    Prediction p;
    p.probabilities = probs.row(0).transpose();
    Eigen::Index best = 0;
    p.probabilities.maxCoeff(&best);
    p.label = static_cast<int>(best);
    return p;
}

std::vector<Prediction> predict_all(Network& net, const std::vector<Example>& docs) {
    std::vector<Prediction> out;
    const auto B = static_cast<std::size_t>(net.spec().batch_size);
    for (std::size_t start = 0; start < docs.size(); start += B) {
        std::vector<std::size_t> rows;
        for (std::size_t i = start; i < std::min(docs.size(), start + B); ++i) {
            rows.push_back(i);
        }
        auto batch = make_batch(docs, rows, min_steps(net.spec()), net.spec().max_len);
        Matrix probs = net.forward(batch, false);
        for (Eigen::Index r = 0; r < probs.rows(); ++r) {
            Prediction p;
            p.probabilities = probs.row(r).transpose();
            Eigen::Index best = 0;
            p.probabilities.maxCoeff(&best);
            p.label = static_cast<int>(best);
            out.push_back(std::move(p));
        }
    }
    return out;
}

std::pair<double, double> score(Network& net, const std::vector<Example>& docs) {
    if (docs.empty()) {
        return {0.0, 0.0};
    }
    auto preds = predict_all(net, docs);
    double loss = 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        loss -= std::log(std::max(preds[i].probabilities(docs[i].label), 1e-300));
        correct += preds[i].label == docs[i].label ? 1 : 0;
    }
    return {loss / static_cast<double>(docs.size()), static_cast<double>(correct) / static_cast<double>(docs.size())};
}

TrainResult train(Network& net, const std::vector<Example>& train_set, const std::vector<Example>& validation) {
    const auto& spec = net.spec();
    if (train_set.empty()) {
        throw DataError("training set is empty");
    }
    std::vector<std::size_t> per_class(static_cast<std::size_t>(spec.classes), 0);
    for (const auto* set : {&train_set, &validation}) {
        for (const auto& e : *set) {
            if (e.label < 0 || e.label >= spec.classes) {
                throw DataError(fmt::format("label {} outside {} classes", e.label, spec.classes));
            }
        }
    }
    for (const auto& e : train_set) {
        ++per_class[static_cast<std::size_t>(e.label)];
    }
    for (std::size_t c = 0; c < per_class.size(); ++c) {
        if (per_class[c] == 0) {
            throw DataError(fmt::format("class {} has no training example", c));
        }
    }

    TrainResult result;
    nn::Adam adam(spec.adam);
    auto params = net.params();
    std::vector<std::size_t> order(train_set.size());
    const auto B = static_cast<std::size_t>(spec.batch_size);
    for (int epoch = 1; epoch <= spec.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        CounterRng rng(derive_seed(spec.seed, 0xE90C), static_cast<std::uint64_t>(epoch));
        shuffle(std::span<std::size_t>(order), rng);
        for (std::size_t start = 0; start < order.size(); start += B) {
            std::vector<std::size_t> rows(order.begin() + static_cast<long>(start),
                                          order.begin() + static_cast<long>(std::min(order.size(), start + B)));
            auto batch = make_batch(train_set, rows, min_steps(spec), spec.max_len);
            result.batch_losses.push_back(net.loss(batch, true, true));
            adam.step(params);
        }
        auto [tl, ta] = score(net, train_set);
        result.log.push_back({epoch, "train", tl, ta});
        if (!validation.empty()) {
            auto [vl, va] = score(net, validation);
            result.log.push_back({epoch, "validation", vl, va});
        }
    }
    return result;
}

std::string training_log_csv(const std::vector<EpochLog>& log) {
    std::string out = "epoch,split,loss,accuracy\n";
    for (const auto& e : log) {
        out += fmt::format("{},{},{:.10g},{:.10g}\n", e.epoch, e.split, e.loss, e.accuracy);
    }
    return out;
}

nn::GradCheckResult grad_check(Network& net, const Batch& batch, double epsilon) {
    return nn::grad_check(net.params(), [&](bool grads) { return net.loss(batch, false, grads); }, epsilon);
}

// -- encoder, embeddings ---------------------------------------------------------------------

SequenceEncoder SequenceEncoder::from_words(std::vector<std::string> words) {
    SequenceEncoder e;
    e.words_ = std::move(words);
    for (std::size_t i = 0; i < e.words_.size(); ++i) {
        if (!e.ids_.emplace(e.words_[i], static_cast<int>(i) + 2).second) {
            throw DataError("duplicate word in encoder vocabulary: " + e.words_[i]);
        }
    }
    return e;
}

SequenceEncoder SequenceEncoder::build(const std::vector<std::vector<std::string>>& docs, std::size_t cap) {
    if (cap < 2) {
        throw UsageError("encoder cap must leave room for pad and unknown");
    }
    std::map<std::string, std::size_t> counts;
    for (const auto& doc : docs) {
        for (const auto& w : doc) {
            ++counts[w];
        }
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (ranked.size() > cap - 2) {
        ranked.resize(cap - 2);
    }
    std::vector<std::string> words;
    for (auto& [w, n] : ranked) {
        words.push_back(w);
    }
    return from_words(std::move(words));
}

std::vector<int> SequenceEncoder::encode(const std::vector<std::string>& words, std::size_t max_len) const {
    std::vector<int> out;
    for (const auto& w : words) {
        if (out.size() >= max_len) {
            break;
        }
        auto it = ids_.find(w);
        out.push_back(it == ids_.end() ? kUnknown : it->second);
    }
    return out;
}

std::optional<int> SequenceEncoder::id(const std::string& word) const {
    auto it = ids_.find(word);
    if (it == ids_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::string SequenceEncoder::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& w : words_) {
        for (unsigned char ch : w) {
            h = (h ^ ch) * 0x100000001b3ULL;
        }
        h = (h ^ 0x0A) * 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

Matrix load_embeddings(const std::optional<std::string>& path, const SequenceEncoder& encoder, int dim,
                       std::uint64_t seed, EmbeddingStats* stats) {
    if (dim < 1) {
        throw UsageError("embedding dimension must be positive");
    }
    CounterRng rng(seed, 0xE3B);
    Matrix table = nn::uniform(static_cast<Eigen::Index>(encoder.size()), dim, 0.05, rng);
    table.row(0).setZero();
    std::vector<bool> found(encoder.size(), false);
    if (path) {
        std::ifstream in(*path, std::ios::binary);
        if (!in) {
            throw DataError("cannot open embeddings " + *path);
        }
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') {
                line.pop_back();
            }
            std::istringstream fields(line);
            std::vector<std::string> parts;
            for (std::string f; fields >> f;) {
                parts.push_back(f);
            }
            if (parts.empty()) {
                continue;
            }
            if (line_no == 1 && parts.size() == 2 &&
                std::all_of(parts[0].begin(), parts[0].end(), ::isdigit) &&
                std::all_of(parts[1].begin(), parts[1].end(), ::isdigit)) {
                if (std::stoi(parts[1]) != dim) {
                    throw DataError(fmt::format("embedding file has dimension {}, expected {}", parts[1], dim));
                }
                continue;
            }
            if (static_cast<int>(parts.size()) != dim + 1) {
                throw DataError(fmt::format("{}:{}: expected a word and {} values, got {} fields", *path, line_no, dim,
                                            parts.size()));
            }
            auto id = encoder.id(parts[0]);
            if (!id) {
                continue;
            }
            for (int k = 0; k < dim; ++k) {
                const auto& s = parts[static_cast<std::size_t>(k) + 1];
                double v = 0.0;
                auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
                if (ec != std::errc() || end != s.data() + s.size()) {
                    throw DataError(fmt::format("{}:{}: bad number '{}'", *path, line_no, s));
                }
                table(*id, k) = v;
            }
            found[static_cast<std::size_t>(*id)] = true;
        }
    }
    if (stats) {
        stats->found = static_cast<std::size_t>(std::count(found.begin(), found.end(), true));
        stats->random = encoder.size() - 1 - stats->found;
    }
    return table;
}

// -- checkpoint -------------------------------------------------------------------------------

namespace {
constexpr const char* kMagic = "NEWSMON-NET 1";
}

void save_network(Network& net, const SequenceEncoder& encoder, const std::vector<std::string>& labels,
                  const std::string& path) {
    nlohmann::json header;
    header["spec"] = to_json(net.spec());
    header["vocab"] = encoder.words();
    header["vocab_hash"] = encoder.hash();
    header["labels"] = labels;
    nlohmann::json shapes = nlohmann::json::array();
    for (auto* p : net.params()) {
        shapes.push_back({{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}});
    }
    header["params"] = shapes;
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path);
    }
    out << kMagic << '\n' << header.dump() << '\n';
    for (auto* p : net.params()) {
        out.write(reinterpret_cast<const char*>(p->value.data()),
                  static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(p->value.size())));
    }
    if (!out) {
        throw DataError("failed writing " + path);
    }
}

LoadedNetwork load_network(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open network checkpoint " + path);
    }
    std::string magic, header_line;
    std::getline(in, magic);
    if (magic != kMagic) {
        throw DataError(path + " is not a version-1 network checkpoint");
    }
    std::getline(in, header_line);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_line);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed checkpoint header: ") + e.what());
    }
    auto encoder = SequenceEncoder::from_words(header.at("vocab").get<std::vector<std::string>>());
    LoadedNetwork loaded{Network(net_spec_from_json(header.at("spec"))), std::move(encoder),
                         header.at("labels").get<std::vector<std::string>>()};
    if (loaded.encoder.size() != loaded.net.spec().vocab_size) {
        throw DataError("checkpoint vocabulary does not match its spec");
    }
    auto params = loaded.net.params();
    const auto& shapes = header.at("params");
    if (shapes.size() != params.size()) {
        throw DataError("checkpoint parameter list does not match its spec");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto* p = params[i];
        if (shapes[i].at("rows").get<Eigen::Index>() != p->value.rows() ||
            shapes[i].at("cols").get<Eigen::Index>() != p->value.cols()) {
            throw DataError("checkpoint parameter " + p->name + " has the wrong shape");
        }
        in.read(reinterpret_cast<char*>(p->value.data()),
                static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(p->value.size())));
        if (!in) {
            throw DataError("checkpoint " + path + " is truncated");
        }
    }
    return loaded;
}

} // namespace newsmon
