#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace svnn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Flat key=value configuration for one command. Keys outside the command's
/// table are rejected; every key has a default so the resolved view is total.
class RunConfig {
 public:
  RunConfig(std::string command, std::map<std::string, std::string> defaults);

  const std::string& command() const noexcept { return command_; }
  void set(const std::string& key, const std::string& value);
  /// Lines of `key=value`; blank lines and lines starting with '#' are skipped.
  void load_file(const std::filesystem::path& path);

  const std::string& get(const std::string& key) const;
  double number(const std::string& key) const;
  std::size_t count(const std::string& key) const;
  std::uint64_t seed(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<std::string> list(const std::string& key) const;
  std::vector<double> numbers(const std::string& key) const;

  const std::map<std::string, std::string>& values() const noexcept { return values_; }
  /// Resolved configuration in the same format load_file accepts.
  std::string to_text() const;

 private:
  std::string command_;
  std::map<std::string, std::string> values_;
};

/// Default table for a command; throws ConfigError for unknown commands.
RunConfig make_config(const std::string& command);

/// `args` excludes the program name: <command> [--config FILE] [--key value | --key=value]...
RunConfig parse_args(const std::vector<std::string>& args);

int cmd_gen(const RunConfig& cfg, std::ostream& out);
int cmd_sparsify(const RunConfig& cfg, std::ostream& out);
int cmd_train(const RunConfig& cfg, std::ostream& out);
int cmd_stability(const RunConfig& cfg, std::ostream& out);
int cmd_bench(const RunConfig& cfg, std::ostream& out);
int cmd_freq(const RunConfig& cfg, std::ostream& out);

/// Parses, dispatches and maps failures to exit codes.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string usage();

}  // namespace svnn::cli
