#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "rems/runtime/systems.hpp"

namespace rems {

/// `t,key[unit],...,stale` for one schema.
std::string log_header(const Schema& schema);
/// One data row; numbers use the shortest round-trip form.
std::string log_row(double t, const DefRecord& rec, bool stale);

/// Writes `<dir>/<robot>_<space>.csv` for input, state and output of every
/// attached robot, one row per step. Any I/O failure throws IoError, which
/// disables this writer only.
class LogWriter final : public OutputSystem {
 public:
  explicit LogWriter(std::filesystem::path dir) : dir_(std::move(dir)) {}
  ~LogWriter() override;

  std::string name() const override { return "log:" + dir_.string(); }
  void setup(const std::vector<RobotInfo>& robots) override;
  void consume(const StepSnapshot& snapshot) override;
  std::vector<std::string> finalize() override;

  static std::filesystem::path file_for(const std::filesystem::path& dir, std::string_view robot,
                                        std::string_view space);

 private:
  struct Sink {
    std::filesystem::path path;
    std::ofstream out;
  };
  void write(Sink& sink, const std::string& text);

  std::filesystem::path dir_;
  std::vector<std::string> robot_ids_;
  std::vector<std::unique_ptr<Sink>> sinks_;  // 3 per robot: input, state, output
};

}  // namespace rems
