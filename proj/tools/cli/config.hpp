#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cgan/data/synthetic.hpp"
#include "cgan/model/discriminator.hpp"
#include "cgan/model/generator.hpp"
#include "cgan/train/adversarial.hpp"

namespace cgan::cli {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Flat key=value run configuration. Every key has a default; unknown keys
/// and malformed values are rejected.
class RunConfig {
 public:
  RunConfig();

  /// Applies "key=value" lines; '#' starts a comment, blank lines are skipped.
  void parse(const std::string& text, const std::string& origin = "config");
  void load(const std::filesystem::path& path);
  /// A single "key=value" override.
  void set(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  [[nodiscard]] const std::string& get(const std::string& key) const;
  [[nodiscard]] std::size_t get_size(const std::string& key) const;
  [[nodiscard]] double get_double(const std::string& key) const;
  [[nodiscard]] bool get_bool(const std::string& key) const;
  [[nodiscard]] std::uint64_t get_seed(const std::string& key) const;

  /// Every key with its current value, one "key=value" per line, sorted.
  [[nodiscard]] std::string dump() const;

  struct Entry {
    std::string value;
    std::string doc;
  };
  [[nodiscard]] const std::map<std::string, Entry>& entries() const { return entries_; }

  // Typed views.
  [[nodiscard]] model::GeneratorConfig generator(std::size_t vocab) const;
  [[nodiscard]] model::DiscriminatorConfig discriminator(std::size_t vocab) const;
  [[nodiscard]] model::EncoderDims critic_dims(std::size_t vocab) const;
  [[nodiscard]] train::Schedule schedule() const;
  [[nodiscard]] train::AdversarialConfig adversarial() const;
  [[nodiscard]] data::SceneConfig scene() const;

 private:
  void check(const std::string& key, const std::string& value) const;

  std::map<std::string, Entry> entries_;
};

}  // namespace cgan::cli
