#include "trsearch/external_sim.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace trsearch {

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw EnvError("cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw EnvError("cannot write '" + path.string() + "'");
  out << text;
}

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// {name} placeholders; "${" is left alone so shell variables survive.
std::vector<std::string> placeholders(const std::string& text) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '{') continue;
    if (i > 0 && text[i - 1] == '$') continue;
    std::size_t j = i + 1;
    while (j < text.size() && is_ident_char(text[j])) ++j;
    if (j > i + 1 && j < text.size() && text[j] == '}') {
      out.push_back(text.substr(i + 1, j - i - 1));
      i = j;
    }
  }
  return out;
}

std::string tail_of(const std::string& text, std::size_t limit = 400) {
  std::string t = text;
  while (!t.empty() && (t.back() == '\n' || t.back() == '\r')) t.pop_back();
  if (t.size() > limit) t = "..." + t.substr(t.size() - limit);
  return t;
}

struct RunOutcome {
  bool started = false;
  bool timed_out = false;
  int exit_code = -1;
  std::string error;
};

RunOutcome run_command(const std::string& command, const fs::path& cwd, const fs::path& stdout_path,
                       const fs::path& stderr_path, double timeout_s) {
  RunOutcome out;
  pid_t pid = fork();
  if (pid < 0) {
    out.error = "fork failed";
    return out;
  }
  if (pid == 0) {
    // Child: own process group so a timeout can kill the whole tree.
    setpgid(0, 0);
    int out_fd = open(stdout_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    int err_fd = open(stderr_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (out_fd < 0 || err_fd < 0) _exit(126);
    dup2(out_fd, STDOUT_FILENO);
    dup2(err_fd, STDERR_FILENO);
    close(out_fd);
    close(err_fd);
    if (chdir(cwd.c_str()) != 0) _exit(126);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  out.started = true;
  auto deadline = std::chrono::steady_clock::now() +
                  std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                      std::chrono::duration<double>(timeout_s));
  int status = 0;
  while (true) {
    pid_t r = waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0) {
      out.error = "waitpid failed";
      return out;
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      kill(-pid, SIGKILL);
      waitpid(pid, &status, 0);
      out.timed_out = true;
      return out;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  if (WIFEXITED(status))
    out.exit_code = WEXITSTATUS(status);
  else if (WIFSIGNALED(status))
    out.error = "terminated by signal " + std::to_string(WTERMSIG(status));
  return out;
}

}  // namespace

ExternalSimulator::ExternalSimulator(ProblemSpec problem, ExternalSettings settings,
                                     std::string work_dir)
    : Environment(std::move(problem)), settings_(std::move(settings)), work_dir_(std::move(work_dir)) {
  const ProblemSpec& p = this->problem();
  if (work_dir_.empty()) work_dir_ = fs::temp_directory_path().string();
  fs::create_directories(work_dir_);

  template_text_ = read_file(settings_.template_path);

  for (const auto& [name, pattern] : settings_.patterns) {
    std::size_t mi = p.measurement_index(name);
    try {
      patterns_.emplace_back(mi, std::regex(pattern));
    } catch (const std::regex_error& err) {
      throw EnvError("invalid regex for measurement '" + name + "': " + err.what());
    }
  }
  if (patterns_.size() != p.measurements.size())
    throw EnvError("external simulator defines " + std::to_string(patterns_.size()) +
                   " capture patterns for " + std::to_string(p.measurements.size()) +
                   " measurements");

  // Fail fast on placeholders nothing can fill, instead of failing every
  // evaluation one by one later.
  auto check = [&](const std::string& text, bool allow_netlist, const char* where) {
    for (const auto& name : placeholders(text)) {
      if (name == "corner") continue;
      if (name == "netlist") {
        if (allow_netlist) continue;
        throw EnvError(std::string("{netlist} is only valid in the command, found in ") + where);
      }
      bool is_var = false;
      for (const auto& v : p.variables)
        if (v.name == name) is_var = true;
      if (is_var) continue;
      for (const auto& c : p.corners)
        if (!c.find(name))
          throw EnvError("placeholder {" + name + "} in " + where + " is not a variable and corner '" +
                         c.name + "' does not define it");
    }
  };
  check(template_text_, false, "the netlist template");
  check(settings_.command, true, "the command");
}

std::string ExternalSimulator::substitute(const std::string& text, const Sizing& s,
                                          std::size_t corner, const std::string& netlist_path) const {
  const ProblemSpec& p = problem();
  const Corner& c = p.corners[corner];
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '{' || (i > 0 && text[i - 1] == '$')) {
      out += text[i];
      continue;
    }
    std::size_t j = i + 1;
    while (j < text.size() && is_ident_char(text[j])) ++j;
    if (j == i + 1 || j >= text.size() || text[j] != '}') {
      out += text[i];
      continue;
    }
    std::string name = text.substr(i + 1, j - i - 1);
    if (name == "netlist") {
      out += netlist_path;
    } else if (name == "corner") {
      out += c.name;
    } else {
      bool done = false;
      for (std::size_t v = 0; v < p.variables.size(); ++v) {
        if (p.variables[v].name == name) {
          out += format_double(raw_value(p, s, v));
          done = true;
          break;
        }
      }
      if (!done) {
        const CornerParam* param = c.find(name);
        if (!param) throw EnvError("unresolved placeholder {" + name + "}");
        if (const double* d = std::get_if<double>(param))
          out += format_double(*d);
        else
          out += std::get<std::string>(*param);
      }
    }
    i = j;
  }
  return out;
}

EvalResult ExternalSimulator::compute(const Sizing& s, std::size_t corner) {
  EvalResult r;
  auto fail = [&](const std::string& why) {
    r.ok = false;
    r.error = why;
    r.meas.clear();
    return r;
  };

  // Scratch directory per evaluation; concurrent evaluations never share
  // files. Cleaned up on every path, diagnostics carry the stderr tail.
  std::string dir_template = work_dir_ + "/trsim_XXXXXX";
  std::vector<char> buf(dir_template.begin(), dir_template.end());
  buf.push_back('\0');
  if (!mkdtemp(buf.data())) return fail("cannot create scratch directory in " + work_dir_);
  fs::path dir(buf.data());

  struct Cleanup {
    fs::path dir;
    ~Cleanup() {
      std::error_code ec;
      fs::remove_all(dir, ec);
    }
  } cleanup{dir};

  try {
    fs::path name = fs::path(settings_.template_path).filename();
    if (name.extension() == ".tmpl") name = name.stem();
    fs::path netlist = dir / name;
    write_file(netlist, substitute(template_text_, s, corner, netlist.string()));

    std::string command = substitute(settings_.command, s, corner, netlist.string());
    fs::path stdout_path = dir / "stdout.log";
    fs::path stderr_path = dir / "stderr.log";
    RunOutcome run = run_command(command, dir, stdout_path, stderr_path, settings_.timeout_s);

    if (!run.started || !run.error.empty())
      return fail("simulator did not run: " + (run.error.empty() ? "unknown" : run.error));
    if (run.timed_out)
      return fail("simulator timed out after " + format_double(settings_.timeout_s) + "s");
    if (run.exit_code != 0) {
      std::string err_text;
      try {
        err_text = tail_of(read_file(stderr_path));
      } catch (const EnvError&) {
      }
      return fail("simulator exited with code " + std::to_string(run.exit_code) +
                  (err_text.empty() ? "" : ": " + err_text));
    }

    fs::path out_path = stdout_path;
    if (settings_.output_source.rfind("file:", 0) == 0)
      out_path = dir / settings_.output_source.substr(5);
    std::string output;
    try {
      output = read_file(out_path);
    } catch (const EnvError&) {
      return fail("simulator produced no output at '" + out_path.string() + "'");
    }

    const ProblemSpec& p = problem();
    r.meas.assign(p.measurements.size(), 0.0);
    for (const auto& [mi, re] : patterns_) {
      std::smatch m;
      if (!std::regex_search(output, m, re) || m.size() < 2)
        return fail("measurement '" + p.measurements[mi] + "' not found in simulator output");
      const std::string tok = m[1].str();
      char* end = nullptr;
      double v = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str())
        return fail("measurement '" + p.measurements[mi] + "' captured unparsable text '" + tok + "'");
      r.meas[mi] = v;  // finiteness enforced by the base class
    }
    r.ok = true;
    return r;
  } catch (const EnvError& err) {
    return fail(err.what());
  } catch (const fs::filesystem_error& err) {
    return fail(std::string("filesystem error: ") + err.what());
  }
}

}  // namespace trsearch
