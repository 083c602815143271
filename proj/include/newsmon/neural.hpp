#pragma once

#include "newsmon/nn.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace newsmon {

struct RecurrentSpec {
    int hidden = 100;
    bool bidirectional = false;
    double dropout = 0.0;  // applied to this layer's output
};

/// Layer stack: embedding -> [conv + ReLU] -> [max-pool] -> recurrent layers
/// (all but the last return sequences) -> hidden dense ReLU layers -> dense
/// softmax over `classes`.
struct NetSpec {
    std::string name = "net";
    std::size_t vocab_size = 2;  // including pad (0) and unknown (1)
    int embedding_dim = 300;
    int max_len = 1000;
    int conv_filters = 0;  // 0: no convolution
    int conv_width = 3;
    int pool = 0;          // 0: no pooling
    std::vector<RecurrentSpec> recurrent{RecurrentSpec{}};
    std::vector<int> dense;  // hidden ReLU layers
    int classes = 2;
    double l2 = 0.0;
    nn::AdamConfig adam;
    int batch_size = 32;
    int epochs = 5;
    std::uint64_t seed = 1;

    /// Throws UsageError on incompatible or out-of-range settings.
    void validate() const;
};

nlohmann::json to_json(const NetSpec& s);
NetSpec net_spec_from_json(const nlohmann::json& j);

inline constexpr std::size_t kClassifierVocabCap = 50000;
inline constexpr std::size_t kSentimentVocabCap = 60000;

/// Embedding 300 -> LSTM 100 -> softmax over `classes`; batch 32, 5 epochs,
/// sequences capped at 1000 tokens.
NetSpec classifier_spec(std::size_t vocab_size, int classes);
/// Embedding 300 -> Conv1D 200 x width 3 + ReLU -> max-pool 2 -> BiLSTM 100
/// (sequences) -> dropout 0.5 -> BiLSTM 100 -> dropout 0.5 -> dense 64 ReLU
/// -> softmax over 2; Adam + L2 1e-4; batch 256, 5 epochs, 200-token cap.
/// The sizes are parameters so tests can build the same shape at tiny dims.
NetSpec sentiment_spec(std::size_t vocab_size, int embedding_dim = 300, int filters = 200, int hidden = 100,
                       int dense = 64);

/// One encoded document: ids in [0, vocab) with 0 = pad, 1 = unknown.
struct Example {
    std::vector<int> ids;
    int label = 0;
};

struct Batch {
    Eigen::MatrixXi ids;  // B x T, zero padded at the end
    std::vector<int> lengths;
    std::vector<int> labels;
};

/// Pads the chosen examples to the longest one (at least `min_steps`);
/// max_steps > 0 truncates each example to its first max_steps ids.
Batch make_batch(const std::vector<Example>& examples, const std::vector<std::size_t>& rows, int min_steps = 1,
                 int max_steps = 0);

class Network {
public:
    explicit Network(NetSpec spec);
    Network(Network&&) noexcept;
    Network& operator=(Network&&) noexcept;
    ~Network();

    const NetSpec& spec() const { return spec_; }

    /// Class probabilities (B x classes).
    nn::Matrix forward(const Batch& batch, bool training);
    /// Mean cross-entropy plus the L2 penalty l2 * sum(w^2) over kernel
    /// weights; with `gradients`, zeroes and fills every parameter gradient.
    double loss(const Batch& batch, bool training, bool gradients);

    std::vector<nn::Param*> params();
    nn::Param& embedding();
    /// Copies a vocab x dim table (row 0 is forced to zero).
    void set_embeddings(const nn::Matrix& table);

private:
    struct Layers;
    NetSpec spec_;
    std::unique_ptr<Layers> layers_;
};

struct Prediction {
    int label = 0;
    Eigen::VectorXd probabilities;
};

/// Inference on one document; ids are truncated to the spec's max_len.
Prediction predict(Network& net, const std::vector<int>& ids);
std::vector<Prediction> predict_all(Network& net, const std::vector<Example>& docs);

struct EpochLog {
    int epoch = 0;
    std::string split;  // "train" or "validation"
    double loss = 0.0;  // mean cross-entropy, inference mode
    double accuracy = 0.0;
};

struct TrainResult {
    std::vector<EpochLog> log;
    /// Training objective of every mini-batch, in order.
    std::vector<double> batch_losses;
};

/// Mini-batch Adam over shuffled epochs (order from the spec seed). Dropout is
/// active only here. After each epoch the train and validation sets are
/// scored in inference mode. Throws DataError when a class has no training
/// example or a label is out of range.
TrainResult train(Network& net, const std::vector<Example>& train_set, const std::vector<Example>& validation);

/// Mean cross-entropy and accuracy in inference mode.
std::pair<double, double> score(Network& net, const std::vector<Example>& docs);

/// "epoch,split,loss,accuracy".
std::string training_log_csv(const std::vector<EpochLog>& log);

/// Finite-difference check of every parameter of `net` on `batch` (dropout off).
nn::GradCheckResult grad_check(Network& net, const Batch& batch, double epsilon = 1e-5);

/// Word -> id map for network inputs: the `cap - 2` most frequent training
/// words (ties by byte order) take ids 2.. in frequency order.
class SequenceEncoder {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnknown = 1;

    SequenceEncoder() = default;
    static SequenceEncoder build(const std::vector<std::vector<std::string>>& docs, std::size_t cap);
    static SequenceEncoder from_words(std::vector<std::string> words);

    /// First `max_len` words; unknown words map to kUnknown. No padding.
    std::vector<int> encode(const std::vector<std::string>& words, std::size_t max_len) const;
    std::size_t size() const { return words_.size() + 2; }
    const std::vector<std::string>& words() const { return words_; }  // word of id i + 2
    std::optional<int> id(const std::string& word) const;
    std::string hash() const;

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, int> ids_;
};

struct EmbeddingStats {
    std::size_t found = 0;
    std::size_t random = 0;
};

/// vocab x dim table from a word2vec-style text file ("word v1 ... vd", an
/// optional "count dim" header line). Words absent from the file (and the
/// unknown id) draw from uniform(-0.05, 0.05) with `seed`; row 0 stays zero.
/// Without a path every row is random. Throws DataError on malformed lines
/// or a dimension mismatch.
nn::Matrix load_embeddings(const std::optional<std::string>& path, const SequenceEncoder& encoder, int dim,
                           std::uint64_t seed, EmbeddingStats* stats = nullptr);

/// Versioned checkpoint: a JSON header line (spec, vocabulary, label names,
/// parameter shapes) followed by the raw little-endian doubles.
void save_network(Network& net, const SequenceEncoder& encoder, const std::vector<std::string>& labels,
                  const std::string& path);

struct LoadedNetwork {
    Network net;
    SequenceEncoder encoder;
    std::vector<std::string> labels;
};
LoadedNetwork load_network(const std::string& path);

} // namespace newsmon
