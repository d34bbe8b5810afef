#pragma once

// CLI subcommands. Each returns a process exit code; library errors
// propagate as exceptions and are mapped by the front end.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace confstab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 2;    // validation / precondition / parse failure
inline constexpr int kExitAssertion = 3;  // a checked inequality failed

struct CommandOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  int jobs = 1;
};

struct ConfusionOptions {
  std::string hypothesis_path;
  std::string data_path;
  std::string loss = "zero_one";
  std::optional<std::vector<double>> prior;
  std::optional<std::string> config_path;  // experiment.prior is used if set
  std::string out_dir = "out";
};

int cmd_train(const CommandOptions& o, std::ostream& log);
int cmd_confusion(const ConfusionOptions& o, std::ostream& log);
int cmd_stability(const CommandOptions& o, std::ostream& log);
int cmd_bound(const CommandOptions& o, std::ostream& log);
int cmd_concentration(const CommandOptions& o, std::ostream& log);
int cmd_mcdiarmid(const CommandOptions& o, std::ostream& log);

}  // namespace confstab
