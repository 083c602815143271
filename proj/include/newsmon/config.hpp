#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace newsmon {

struct ConfigKey {
    std::string_view name;  // "section.key"
    std::string_view default_value;
    std::string_view help;
};

/// Every recognised key with its default, in documentation order.
const std::vector<ConfigKey>& config_keys();

/// Flat key-value run configuration. Files hold `section.key = value` lines;
/// '#' starts a comment. Precedence, lowest first: defaults, config file,
/// MONITOR_SEED (run.seed only), command-line overrides.
class RunConfig {
public:
    RunConfig();

    /// Throws UsageError on syntax errors or unknown keys, DataError if unreadable.
    void merge_file(const std::string& path);
    void merge_text(std::string_view text, const std::string& origin = "config");
    /// Throws UsageError on an unknown key.
    void set(const std::string& key, const std::string& value);
    /// Applies MONITOR_SEED when it is set.
    void apply_environment();

    const std::string& get(const std::string& key) const;
    int get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::uint64_t seed() const;
    /// Comma separated, blanks removed.
    std::vector<std::string> get_list(const std::string& key) const;

    /// Paths: empty values resolve to the documented fallbacks.
    std::string corpus_path() const { return get("run.corpus"); }
    std::string output_dir() const { return get("run.output"); }
    std::string resources_dir() const { return get("run.resources"); }
    std::string gazetteer_path() const;

    /// Range checks plus "referenced files exist" and "output dir is
    /// creatable". Throws UsageError.
    void validate() const;

    /// Sorted `key = value` lines. run.output is left out so bundles written
    /// to different directories stay byte-identical.
    std::string snapshot() const;
    nlohmann::json to_json() const;
    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

} // namespace newsmon
