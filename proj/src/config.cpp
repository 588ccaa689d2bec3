#include "trsearch/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

namespace trsearch {

namespace {

// ---------------------------------------------------------------------------
// Low-level parsing: a small TOML-style dialect. Sections, key = value,
// strings, numbers, booleans, arrays (may span lines), single-line inline
// tables, '#' comments. That covers every config this tool reads without
// dragging in a full TOML implementation.

struct PValue {
  enum class Kind { Number, String, Bool, Array, Table };
  Kind kind = Kind::Number;
  double num = 0.0;
  bool is_int = false;
  long long inum = 0;
  std::string str;
  bool boolean = false;
  std::vector<PValue> arr;
  std::vector<std::pair<std::string, PValue>> table;
};

struct Entry {
  std::string key;
  PValue value;
  int line = 0;
};

struct Section {
  std::vector<std::string> path;
  std::vector<Entry> entries;
  int line = 0;
};

[[noreturn]] void fail(const std::string& msg, int line) { throw ConfigError(msg, line); }

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Strips a '#' comment (outside strings) and reports the bracket depth
// delta of what remains, so multi-line arrays can be stitched together.
std::string strip_comment(const std::string& line, int line_no, int& depth) {
  std::string out;
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (in_str) {
      out += c;
      if (c == '\\') {
        if (i + 1 >= line.size()) fail("dangling escape in string", line_no);
        out += line[++i];
      } else if (c == '"') {
        in_str = false;
      }
      continue;
    }
    if (c == '#') break;
    if (c == '"') in_str = true;
    if (c == '[' || c == '{') ++depth;
    if (c == ']' || c == '}') --depth;
    out += c;
  }
  if (in_str) fail("unterminated string", line_no);
  return out;
}

struct Cursor {
  const std::string& text;
  std::size_t pos = 0;
  int line = 0;

  bool done() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }
  void skip_ws() {
    while (!done() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
  }
};

std::string parse_quoted(Cursor& c) {
  // c.pos at the opening quote
  ++c.pos;
  std::string out;
  while (!c.done()) {
    char ch = c.text[c.pos++];
    if (ch == '"') return out;
    if (ch == '\\') {
      if (c.done()) fail("dangling escape in string", c.line);
      char esc = c.text[c.pos++];
      switch (esc) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        default: fail(std::string("unsupported escape '\\") + esc + "'", c.line);
      }
    } else {
      out += ch;
    }
  }
  fail("unterminated string", c.line);
}

bool is_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
}

std::string parse_key(Cursor& c) {
  c.skip_ws();
  std::string key;
  while (!c.done() && is_key_char(c.peek()) && c.peek() != '.') key += c.text[c.pos++];
  if (key.empty()) fail("expected a key", c.line);
  return key;
}

PValue parse_value(Cursor& c);

PValue parse_number(Cursor& c) {
  std::size_t start = c.pos;
  while (!c.done() && (std::isalnum(static_cast<unsigned char>(c.peek())) || c.peek() == '+' ||
                       c.peek() == '-' || c.peek() == '.'))
    ++c.pos;
  std::string tok = c.text.substr(start, c.pos - start);
  if (tok == "true" || tok == "false") {
    PValue v;
    v.kind = PValue::Kind::Bool;
    v.boolean = tok == "true";
    return v;
  }
  if (tok.find_first_of("xX") != std::string::npos)
    fail("cannot parse value '" + tok + "'", c.line);
  const char* begin = tok.c_str();
  char* end = nullptr;
  double d = std::strtod(begin, &end);
  if (end != begin + tok.size() || tok.empty())
    fail("cannot parse value '" + tok + "'", c.line);
  if (!std::isfinite(d)) fail("non-finite number '" + tok + "'", c.line);
  PValue v;
  v.num = d;
  bool plain_int = tok.find_first_of(".eE") == std::string::npos;
  if (plain_int) {
    v.is_int = true;
    v.inum = std::strtoll(begin, &end, 10);
  } else if (d == std::floor(d) && std::abs(d) <= 9.0e15) {
    v.is_int = true;
    v.inum = static_cast<long long>(d);
  }
  return v;
}

PValue parse_value(Cursor& c) {
  c.skip_ws();
  if (c.done()) fail("expected a value", c.line);
  char ch = c.peek();
  if (ch == '"') {
    PValue v;
    v.kind = PValue::Kind::String;
    v.str = parse_quoted(c);
    return v;
  }
  if (ch == '[') {
    ++c.pos;
    PValue v;
    v.kind = PValue::Kind::Array;
    c.skip_ws();
    while (!c.done() && c.peek() != ']') {
      v.arr.push_back(parse_value(c));
      c.skip_ws();
      if (!c.done() && c.peek() == ',') {
        ++c.pos;
        c.skip_ws();
      }
    }
    if (c.done()) fail("unterminated array", c.line);
    ++c.pos;  // ']'
    return v;
  }
  if (ch == '{') {
    ++c.pos;
    PValue v;
    v.kind = PValue::Kind::Table;
    c.skip_ws();
    while (!c.done() && c.peek() != '}') {
      std::string key = parse_key(c);
      c.skip_ws();
      if (c.done() || c.peek() != '=') fail("expected '=' in inline table", c.line);
      ++c.pos;
      v.table.emplace_back(key, parse_value(c));
      c.skip_ws();
      if (!c.done() && c.peek() == ',') {
        ++c.pos;
        c.skip_ws();
      }
    }
    if (c.done()) fail("unterminated inline table", c.line);
    ++c.pos;  // '}'
    return v;
  }
  return parse_number(c);
}

std::vector<Section> parse_sections(const std::string& text) {
  std::vector<Section> sections;
  std::istringstream in(text);
  std::string physical;
  int line_no = 0;
  int pending_line = 0;
  std::string logical;
  int depth = 0;

  auto handle_logical = [&](const std::string& raw, int at) {
    std::string s = trim(raw);
    if (s.empty()) return;
    if (s.front() == '[') {
      if (s.back() != ']') fail("malformed section header", at);
      std::string inner = trim(s.substr(1, s.size() - 2));
      if (inner.empty()) fail("empty section header", at);
      Section sec;
      sec.line = at;
      std::size_t start = 0;
      while (true) {
        std::size_t dot = inner.find('.', start);
        std::string part = trim(inner.substr(start, dot - start));
        if (part.empty()) fail("malformed section header", at);
        sec.path.push_back(part);
        if (dot == std::string::npos) break;
        start = dot + 1;
      }
      sections.push_back(std::move(sec));
      return;
    }
    if (sections.empty()) fail("key outside of any section", at);
    Cursor c{s, 0, at};
    Entry e;
    e.key = parse_key(c);
    e.line = at;
    c.skip_ws();
    if (c.done() || c.peek() != '=') fail("expected '=' after key '" + e.key + "'", at);
    ++c.pos;
    e.value = parse_value(c);
    c.skip_ws();
    if (!c.done()) fail("trailing text after value for key '" + e.key + "'", at);
    sections.back().entries.push_back(std::move(e));
  };

  while (std::getline(in, physical)) {
    ++line_no;
    int delta = 0;
    std::string stripped = strip_comment(physical, line_no, delta);
    if (logical.empty()) {
      pending_line = line_no;
      logical = stripped;
      depth = delta;
    } else {
      logical += ' ';
      logical += stripped;
      depth += delta;
    }
    if (depth > 0) continue;  // inside a multi-line array
    if (depth < 0) fail("unbalanced brackets", line_no);
    handle_logical(logical, pending_line);
    logical.clear();
  }
  if (!logical.empty()) {
    if (depth != 0) fail("unterminated array at end of file", pending_line);
    handle_logical(logical, pending_line);
  }
  return sections;
}

// ---------------------------------------------------------------------------
// Typed accessors

double want_number(const Entry& e) {
  if (e.value.kind != PValue::Kind::Number)
    fail("key '" + e.key + "' must be a number", e.line);
  return e.value.num;
}

long long want_int(const Entry& e) {
  if (e.value.kind != PValue::Kind::Number || !e.value.is_int)
    fail("key '" + e.key + "' must be an integer", e.line);
  return e.value.inum;
}

std::string want_string(const Entry& e) {
  if (e.value.kind != PValue::Kind::String)
    fail("key '" + e.key + "' must be a string", e.line);
  return e.value.str;
}

// ---------------------------------------------------------------------------
// Section interpretation

std::vector<double> make_grid(const Entry& e) {
  const PValue& v = e.value;
  if (v.kind == PValue::Kind::Array) {
    std::vector<double> grid;
    grid.reserve(v.arr.size());
    for (const auto& item : v.arr) {
      if (item.kind != PValue::Kind::Number)
        fail("grid for '" + e.key + "' contains a non-number", e.line);
      grid.push_back(item.num);
    }
    return grid;
  }
  if (v.kind != PValue::Kind::Table)
    fail("variable '" + e.key + "' must be a grid array or a {min,max,points} range", e.line);

  double lo = 0, hi = 0;
  long long points = 0;
  std::string spacing = "linear";
  bool have_lo = false, have_hi = false, have_pts = false;
  for (const auto& [k, val] : v.table) {
    Entry sub{k, val, e.line};
    if (k == "min") {
      lo = want_number(sub);
      have_lo = true;
    } else if (k == "max") {
      hi = want_number(sub);
      have_hi = true;
    } else if (k == "points") {
      points = want_int(sub);
      have_pts = true;
    } else if (k == "spacing") {
      spacing = want_string(sub);
    } else {
      fail("unknown range key '" + k + "' for variable '" + e.key + "'", e.line);
    }
  }
  if (!have_lo || !have_hi || !have_pts)
    fail("range for '" + e.key + "' needs min, max and points", e.line);
  if (points < 1) fail("variable '" + e.key + "' needs points >= 1", e.line);
  if (points == 1) return {lo};
  if (!(lo < hi)) fail("variable '" + e.key + "' needs min < max", e.line);
  if (spacing != "linear" && spacing != "log")
    fail("variable '" + e.key + "' spacing must be \"linear\" or \"log\"", e.line);
  if (spacing == "log" && !(lo > 0.0))
    fail("variable '" + e.key + "' log spacing needs min > 0", e.line);

  std::vector<double> grid(static_cast<std::size_t>(points));
  const std::size_t n = grid.size();
  for (std::size_t i = 0; i < n; ++i) {
    double t = static_cast<double>(i) / static_cast<double>(n - 1);
    grid[i] = spacing == "log" ? std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)))
                               : lo + t * (hi - lo);
  }
  grid.front() = lo;  // pin endpoints against rounding drift
  grid.back() = hi;
  return grid;
}

void read_constraint(const Entry& e, const ProblemSpec& p, std::vector<ConstraintSpec>& out) {
  if (e.value.kind != PValue::Kind::Table)
    fail("constraint '" + e.key + "' must be an inline table like { at_least = 60 }", e.line);
  std::optional<double> at_least, at_most, scale;
  for (const auto& [k, v] : e.value.table) {
    Entry sub{k, v, e.line};
    if (k == "at_least")
      at_least = want_number(sub);
    else if (k == "at_most")
      at_most = want_number(sub);
    else if (k == "scale")
      scale = want_number(sub);
    else
      fail("unknown constraint key '" + k + "' on '" + e.key + "'", e.line);
  }
  if (!at_least && !at_most)
    fail("constraint '" + e.key + "' needs at_least and/or at_most", e.line);
  if (scale && !(*scale > 0.0)) fail("constraint '" + e.key + "' scale must be > 0", e.line);

  std::size_t mi;
  try {
    mi = p.measurement_index(e.key);
  } catch (const ConfigError& err) {
    fail(err.message(), e.line);
  }
  auto push = [&](Direction dir, double thr) {
    ConstraintSpec cs;
    cs.measurement = e.key;
    cs.meas_index = mi;
    cs.direction = dir;
    cs.threshold = thr;
    cs.scale = scale ? *scale : std::max(std::abs(thr), 1e-9);
    out.push_back(std::move(cs));
  };
  if (at_least) push(Direction::AtLeast, *at_least);
  if (at_most) push(Direction::AtMost, *at_most);
}

void read_search(const Section& sec, Config& cfg) {
  for (const auto& e : sec.entries) {
    const std::string& k = e.key;
    auto& s = cfg.search;
    if (k == "agent")
      s.agent = agent_from_string(want_string(e));
    else if (k == "strategy")
      s.strategy = strategy_from_string(want_string(e));
    else if (k == "hardest_corner")
      s.hardest_corner = want_string(e);
    else if (k == "seed") {
      long long v = want_int(e);
      if (v < 0) fail("seed must be >= 0", e.line);
      s.seed = static_cast<std::uint64_t>(v);
    } else if (k == "budget")
      cfg.problem.budget = want_int(e);
    else if (k == "escape_patience")
      cfg.problem.escape_patience = static_cast<int>(want_int(e));
    else if (k == "bootstrap_samples")
      s.bootstrap_samples = static_cast<int>(want_int(e));
    else if (k == "mc_samples")
      s.mc_samples = static_cast<int>(want_int(e));
    else if (k == "train_window")
      s.train_window = static_cast<int>(want_int(e));
    else if (k == "eta_accept")
      s.tr.eta_accept = want_number(e);
    else if (k == "eta_shrink")
      s.tr.eta_shrink = want_number(e);
    else if (k == "eta_expand")
      s.tr.eta_expand = want_number(e);
    else if (k == "gamma_shrink")
      s.tr.gamma_shrink = want_number(e);
    else if (k == "gamma_expand")
      s.tr.gamma_expand = want_number(e);
    else if (k == "dr_init")
      s.tr.dr_init = want_number(e);
    else if (k == "dr_min")
      s.dr_min_override = want_number(e);
    else if (k == "dr_max")
      s.tr.dr_max = want_number(e);
    else
      fail("unknown [search] key '" + k + "'", e.line);
  }
  if (cfg.search.bootstrap_samples < 1) fail("bootstrap_samples must be >= 1", sec.line);
  if (cfg.search.mc_samples < 1) fail("mc_samples must be >= 1", sec.line);
  if (cfg.search.train_window < 1) fail("train_window must be >= 1", sec.line);
}

void read_environment(const Section& sec, Config& cfg) {
  bool have_kind = false;
  for (const auto& e : sec.entries) {
    const std::string& k = e.key;
    auto& env = cfg.env;
    if (k == "kind") {
      std::string v = want_string(e);
      if (v == "synthetic_opamp")
        env.kind = EnvKind::SyntheticOpamp;
      else if (v == "toy_landscape")
        env.kind = EnvKind::ToyLandscape;
      else if (v == "external")
        env.kind = EnvKind::External;
      else
        fail("unknown environment kind '" + v + "'", e.line);
      have_kind = true;
    } else if (k == "center") {
      if (e.value.kind != PValue::Kind::Array) fail("center must be an array", e.line);
      env.toy_center.clear();
      for (const auto& item : e.value.arr) {
        if (item.kind != PValue::Kind::Number) fail("center contains a non-number", e.line);
        env.toy_center.push_back(item.num);
      }
    } else if (k == "command")
      env.external.command = want_string(e);
    else if (k == "template")
      env.external.template_path = want_string(e);
    else if (k == "output")
      env.external.output_source = want_string(e);
    else if (k == "timeout_s")
      env.external.timeout_s = want_number(e);
    else if (k == "max_parallel")
      env.external.max_parallel = static_cast<int>(want_int(e));
    else
      fail("unknown [environment] key '" + k + "'", e.line);
  }
  if (!have_kind) fail("[environment] needs a kind", sec.line);
}

void validate_external(const Config& cfg, int line) {
  const auto& ext = cfg.env.external;
  if (ext.command.empty()) fail("external environment needs a command", line);
  if (ext.template_path.empty()) fail("external environment needs a template", line);
  if (ext.output_source != "stdout" && ext.output_source.rfind("file:", 0) != 0)
    fail("external output must be \"stdout\" or \"file:<path>\"", line);
  if (ext.output_source.rfind("file:", 0) == 0 && ext.output_source.size() == 5)
    fail("external output file path is empty", line);
  if (!(ext.timeout_s > 0.0)) fail("external timeout_s must be > 0", line);
  if (ext.max_parallel < 1) fail("external max_parallel must be >= 1", line);
  if (ext.patterns.empty())
    fail("external environment needs an [environment.measurements] section", line);
  for (const auto& [name, pattern] : ext.patterns) {
    try {
      std::regex re(pattern);
    } catch (const std::regex_error& err) {
      fail("invalid regex for measurement '" + name + "': " + err.what(), line);
    }
  }
}

}  // namespace

std::string to_string(Agent a) {
  return a == Agent::TrustRegion ? "trust_region" : "random";
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::ProgressiveRandom: return "progressive_random";
    case Strategy::ProgressiveHardest: return "progressive_hardest";
    case Strategy::BruteForce: return "brute_force";
  }
  return "progressive_random";
}

std::string to_string(EnvKind k) {
  switch (k) {
    case EnvKind::SyntheticOpamp: return "synthetic_opamp";
    case EnvKind::ToyLandscape: return "toy_landscape";
    case EnvKind::External: return "external";
  }
  return "synthetic_opamp";
}

Agent agent_from_string(const std::string& s) {
  if (s == "trust_region") return Agent::TrustRegion;
  if (s == "random") return Agent::Random;
  throw ConfigError("unknown agent '" + s + "' (expected trust_region or random)");
}

Strategy strategy_from_string(const std::string& s) {
  if (s == "progressive_random") return Strategy::ProgressiveRandom;
  if (s == "progressive_hardest") return Strategy::ProgressiveHardest;
  if (s == "brute_force") return Strategy::BruteForce;
  throw ConfigError("unknown strategy '" + s +
                    "' (expected progressive_random, progressive_hardest or brute_force)");
}

Config parse_config(const std::string& text) {
  std::vector<Section> sections = parse_sections(text);
  Config cfg;

  // The environment section decides the measurement schema, so interpret it
  // (and the measurement patterns) before constraints.
  const Section* env_sec = nullptr;
  for (const auto& sec : sections) {
    if (sec.path.size() == 1 && sec.path[0] == "environment") {
      if (env_sec) fail("duplicate [environment] section", sec.line);
      env_sec = &sec;
    }
  }
  if (!env_sec) throw ConfigError("missing [environment] section");
  read_environment(*env_sec, cfg);

  switch (cfg.env.kind) {
    case EnvKind::SyntheticOpamp:
      cfg.problem.measurements = {"gain_db", "ugbw_hz", "pm_deg", "power_w"};
      break;
    case EnvKind::ToyLandscape:
      cfg.problem.measurements = {"value"};
      break;
    case EnvKind::External:
      break;  // filled from [environment.measurements] below
  }

  bool saw_variables = false;
  bool saw_search = false;
  std::vector<std::pair<std::string, const Section*>> constraint_secs;

  for (const auto& sec : sections) {
    if (sec.path.size() == 1 && sec.path[0] == "variables") {
      if (saw_variables) fail("duplicate [variables] section", sec.line);
      saw_variables = true;
      for (const auto& e : sec.entries)
        cfg.problem.variables.push_back(Variable{e.key, make_grid(e)});
    } else if (sec.path.size() == 2 && sec.path[0] == "corners") {
      Corner corner;
      corner.name = sec.path[1];
      for (const auto& e : sec.entries) {
        for (const auto& [k, _] : corner.params)
          if (k == e.key) fail("duplicate corner parameter '" + e.key + "'", e.line);
        if (e.value.kind == PValue::Kind::Number)
          corner.params.emplace_back(e.key, CornerParam(e.value.num));
        else if (e.value.kind == PValue::Kind::String)
          corner.params.emplace_back(e.key, CornerParam(e.value.str));
        else
          fail("corner parameter '" + e.key + "' must be a number or string", e.line);
      }
      cfg.problem.corners.push_back(std::move(corner));
    } else if (sec.path.size() == 2 && sec.path[0] == "constraints") {
      constraint_secs.emplace_back(sec.path[1], &sec);
    } else if (sec.path.size() == 1 && sec.path[0] == "search") {
      if (saw_search) fail("duplicate [search] section", sec.line);
      saw_search = true;
      read_search(sec, cfg);
    } else if (sec.path.size() == 1 && sec.path[0] == "environment") {
      // already handled
    } else if (sec.path.size() == 2 && sec.path[0] == "environment" &&
               sec.path[1] == "measurements") {
      if (cfg.env.kind != EnvKind::External)
        fail("[environment.measurements] is only valid for external environments", sec.line);
      for (const auto& e : sec.entries) {
        cfg.env.external.patterns.emplace_back(e.key, want_string(e));
        cfg.problem.measurements.push_back(e.key);
      }
    } else {
      std::string path;
      for (const auto& part : sec.path) path += (path.empty() ? "" : ".") + part;
      fail("unknown section [" + path + "]", sec.line);
    }
  }

  if (cfg.env.kind == EnvKind::External) validate_external(cfg, env_sec->line);

  // Constraints are stored per corner in corner order, regardless of the
  // order sections appear in the file.
  cfg.problem.constraints.resize(cfg.problem.corners.size());
  for (const auto& [corner_name, sec] : constraint_secs) {
    std::size_t ci;
    try {
      ci = cfg.problem.corner_index(corner_name);
    } catch (const ConfigError& err) {
      fail(err.message(), sec->line);
    }
    for (const auto& e : sec->entries) read_constraint(e, cfg.problem, cfg.problem.constraints[ci]);
  }

  cfg.problem.validate();

  if (!cfg.search.hardest_corner.empty()) cfg.problem.corner_index(cfg.search.hardest_corner);
  if (cfg.search.strategy == Strategy::ProgressiveHardest && cfg.search.hardest_corner.empty())
    throw ConfigError("strategy progressive_hardest needs hardest_corner in [search]");
  if (!cfg.env.toy_center.empty() && cfg.env.toy_center.size() != cfg.problem.var_count())
    throw ConfigError("center has " + std::to_string(cfg.env.toy_center.size()) +
                      " coordinates, problem has " + std::to_string(cfg.problem.var_count()) +
                      " variables");

  // Catch nonsense radius schedules at parse time.
  TrConstants resolved = cfg.search.tr;
  resolved.dr_min = cfg.search.dr_min_override.value_or(default_dr_min(cfg.problem));
  try {
    resolved.validate();
  } catch (const std::logic_error& err) {
    throw ConfigError(err.what());
  }

  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

}  // namespace

std::string write_config(const Config& c) {
  std::ostringstream out;
  out << "[variables]\n";
  for (const auto& v : c.problem.variables) {
    out << v.name << " = [";
    for (std::size_t i = 0; i < v.grid.size(); ++i)
      out << (i ? ", " : "") << format_double(v.grid[i]);
    out << "]\n";
  }
  for (const auto& corner : c.problem.corners) {
    out << "\n[corners." << corner.name << "]\n";
    for (const auto& [k, v] : corner.params) {
      out << k << " = ";
      if (const double* d = std::get_if<double>(&v))
        out << format_double(*d);
      else
        out << quote(std::get<std::string>(v));
      out << "\n";
    }
  }
  for (std::size_t ci = 0; ci < c.problem.corners.size(); ++ci) {
    out << "\n[constraints." << c.problem.corners[ci].name << "]\n";
    for (const auto& cs : c.problem.constraints[ci]) {
      out << cs.measurement << " = { "
          << (cs.direction == Direction::AtLeast ? "at_least" : "at_most") << " = "
          << format_double(cs.threshold) << ", scale = " << format_double(cs.scale) << " }\n";
    }
  }

  const auto& s = c.search;
  out << "\n[search]\n";
  out << "agent = " << quote(to_string(s.agent)) << "\n";
  out << "strategy = " << quote(to_string(s.strategy)) << "\n";
  if (!s.hardest_corner.empty()) out << "hardest_corner = " << quote(s.hardest_corner) << "\n";
  out << "seed = " << s.seed << "\n";
  out << "budget = " << c.problem.budget << "\n";
  out << "escape_patience = " << c.problem.escape_patience << "\n";
  out << "bootstrap_samples = " << s.bootstrap_samples << "\n";
  out << "mc_samples = " << s.mc_samples << "\n";
  out << "train_window = " << s.train_window << "\n";
  out << "eta_accept = " << format_double(s.tr.eta_accept) << "\n";
  out << "eta_shrink = " << format_double(s.tr.eta_shrink) << "\n";
  out << "eta_expand = " << format_double(s.tr.eta_expand) << "\n";
  out << "gamma_shrink = " << format_double(s.tr.gamma_shrink) << "\n";
  out << "gamma_expand = " << format_double(s.tr.gamma_expand) << "\n";
  out << "dr_init = " << format_double(s.tr.dr_init) << "\n";
  if (s.dr_min_override) out << "dr_min = " << format_double(*s.dr_min_override) << "\n";
  out << "dr_max = " << format_double(s.tr.dr_max) << "\n";

  out << "\n[environment]\n";
  out << "kind = " << quote(to_string(c.env.kind)) << "\n";
  if (!c.env.toy_center.empty()) {
    out << "center = [";
    for (std::size_t i = 0; i < c.env.toy_center.size(); ++i)
      out << (i ? ", " : "") << format_double(c.env.toy_center[i]);
    out << "]\n";
  }
  if (c.env.kind == EnvKind::External) {
    const auto& ext = c.env.external;
    out << "command = " << quote(ext.command) << "\n";
    out << "template = " << quote(ext.template_path) << "\n";
    out << "output = " << quote(ext.output_source) << "\n";
    out << "timeout_s = " << format_double(ext.timeout_s) << "\n";
    out << "max_parallel = " << ext.max_parallel << "\n";
    out << "\n[environment.measurements]\n";
    for (const auto& [name, pattern] : ext.patterns)
      out << name << " = " << quote(pattern) << "\n";
  }
  return out.str();
}

std::string config_hash(const Config& c) { return format_hex64(fnv1a64(write_config(c))); }

std::string problem_hash(const Config& c) {
  Config masked = c;
  masked.search.agent = Agent::TrustRegion;
  masked.search.strategy = Strategy::ProgressiveRandom;
  masked.search.seed = 0;
  return config_hash(masked);
}

}  // namespace trsearch
