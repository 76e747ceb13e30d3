#include "rems/iosys/log_writer.hpp"

#include <array>

#include "rems/error.hpp"

namespace rems {

namespace {
constexpr std::array<const char*, 3> kSpaces{"input", "state", "output"};
}

std::string log_header(const Schema& schema) {
  std::string s = "t";
  for (const auto& f : schema.fields()) s += "," + f.key + "[" + f.spec.unit_name() + "]";
  return s + ",stale\n";
}

std::string log_row(double t, const DefRecord& rec, bool stale) {
  std::string s = format_number(t);
  for (double v : rec.values()) {
    s += ',';
    s += format_number(v);
  }
  s += stale ? ",1\n" : ",0\n";
  return s;
}

std::filesystem::path LogWriter::file_for(const std::filesystem::path& dir, std::string_view robot,
                                          std::string_view space) {
  return dir / (std::string(robot) + "_" + std::string(space) + ".csv");
}

LogWriter::~LogWriter() = default;

void LogWriter::write(Sink& sink, const std::string& text) {
  sink.out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!sink.out) throw Error(ErrorKind::io_error, "write failed: " + sink.path.string());
}

void LogWriter::setup(const std::vector<RobotInfo>& robots) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw Error(ErrorKind::io_error, "cannot create log directory " + dir_.string() + ": " + ec.message());
  for (const auto& r : robots) {
    robot_ids_.push_back(r.id);
    for (const char* space : kSpaces) {
      auto sink = std::make_unique<Sink>();
      sink->path = file_for(dir_, r.id, space);
      sink->out.open(sink->path, std::ios::binary | std::ios::trunc);
      if (!sink->out) throw Error(ErrorKind::io_error, "cannot open " + sink->path.string());
      const Space sp = std::string_view(space) == "input"   ? Space::input
                       : std::string_view(space) == "state" ? Space::state
                                                            : Space::output;
      write(*sink, log_header(r.definition.schema(sp)));
      sinks_.push_back(std::move(sink));
    }
  }
}

void LogWriter::consume(const StepSnapshot& snapshot) {
  for (std::size_t i = 0; i < snapshot.robots.size() && i < robot_ids_.size(); ++i) {
    const auto& r = snapshot.robots[i];
    write(*sinks_[3 * i], log_row(snapshot.t, r.input, r.input.stale()));
    write(*sinks_[3 * i + 1], log_row(snapshot.t, r.state, r.stale));
    write(*sinks_[3 * i + 2], log_row(snapshot.t, r.output, r.stale));
  }
}

std::vector<std::string> LogWriter::finalize() {
  std::vector<std::string> files;
  std::string failed;
  for (auto& s : sinks_) {
    s->out.flush();
    if (!s->out) failed += " " + s->path.string();
    s->out.close();
    files.push_back(s->path.string());
  }
  if (!failed.empty()) throw Error(ErrorKind::io_error, "flush failed:" + failed);
  return files;
}

}  // namespace rems
