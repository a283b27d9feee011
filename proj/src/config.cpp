#include "brw/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "brw/errors.hpp"

namespace brw {

double ConfigValue::number(const std::string& what) const {
  if (!is_number()) throw ConfigParseError(what + ": expected a number");
  return std::get<double>(v);
}
const std::string& ConfigValue::string(const std::string& what) const {
  if (!is_string()) throw ConfigParseError(what + ": expected a string");
  return std::get<std::string>(v);
}
bool ConfigValue::boolean(const std::string& what) const {
  if (!is_bool()) throw ConfigParseError(what + ": expected a boolean");
  return std::get<bool>(v);
}
const ConfigArray& ConfigValue::array(const std::string& what) const {
  if (!is_array()) throw ConfigParseError(what + ": expected an array");
  return std::get<ConfigArray>(v);
}
const ConfigTable& ConfigValue::table(const std::string& what) const {
  if (!is_table()) throw ConfigParseError(what + ": expected an inline table");
  return std::get<ConfigTable>(v);
}

// ---------------------------------------------------------------------------
// Tokenizer / parser

namespace {

struct Token {
  enum Kind { LBracket, RBracket, LBrace, RBrace, Equals, Comma, Dot, Newline, String, Bare, End };
  Kind kind;
  std::string text;
  int line;
};

struct Lexer {
  const std::string& src;
  size_t pos = 0;
  int line = 1;

  explicit Lexer(const std::string& s) : src(s) {}

  Token next() {
    while (pos < src.size()) {
      char c = src[pos];
      if (c == ' ' || c == '\t' || c == '\r') {
        ++pos;
        continue;
      }
      if (c == '#') {
        while (pos < src.size() && src[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    if (pos >= src.size()) return {Token::End, "", line};
    char c = src[pos];
    int at = line;
    switch (c) {
      case '\n':
        ++pos;
        ++line;
        return {Token::Newline, "\n", at};
      case '[':
        ++pos;
        return {Token::LBracket, "[", at};
      case ']':
        ++pos;
        return {Token::RBracket, "]", at};
      case '{':
        ++pos;
        return {Token::LBrace, "{", at};
      case '}':
        ++pos;
        return {Token::RBrace, "}", at};
      case '=':
        ++pos;
        return {Token::Equals, "=", at};
      case ',':
        ++pos;
        return {Token::Comma, ",", at};
      default:
        break;
    }
    if (c == '"') {
      ++pos;
      std::string out;
      while (pos < src.size() && src[pos] != '"') {
        if (src[pos] == '\\' && pos + 1 < src.size()) {
          ++pos;
          char e = src[pos];
          out += (e == 'n' ? '\n' : e == 't' ? '\t' : e);
        } else {
          out += src[pos];
        }
        ++pos;
      }
      if (pos >= src.size()) throw ConfigParseError("unterminated string at line " + std::to_string(at));
      ++pos;
      return {Token::String, out, at};
    }
    // Bare token: key fragment, number, or boolean. Dots split keys but are
    // part of numbers, so keep them when adjacent to digits.
    std::string out;
    while (pos < src.size()) {
      char d = src[pos];
      bool numeric_dot = d == '.' && !out.empty() &&
                         (std::isdigit(static_cast<unsigned char>(out.back())) || out.back() == '-');
      if (std::isalnum(static_cast<unsigned char>(d)) || d == '_' || d == '-' || d == '+' ||
          numeric_dot || d == 'e' || d == 'E') {
        out += d;
        ++pos;
      } else {
        break;
      }
    }
    if (out.empty()) {
      if (c == '.') {
        ++pos;
        return {Token::Dot, ".", at};
      }
      throw ConfigParseError("unexpected character '" + std::string(1, c) + "' at line " +
                             std::to_string(at));
    }
    return {Token::Bare, out, at};
  }
};

struct Parser {
  std::vector<Token> toks;
  size_t idx = 0;

  explicit Parser(const std::string& text) {
    Lexer lex(text);
    for (;;) {
      Token t = lex.next();
      toks.push_back(t);
      if (t.kind == Token::End) break;
    }
  }

  const Token& peek(size_t ahead = 0) const { return toks[std::min(idx + ahead, toks.size() - 1)]; }
  Token take() { return toks[idx < toks.size() - 1 ? idx++ : idx]; }
  void skip_newlines() {
    while (peek().kind == Token::Newline) take();
  }
  void expect(Token::Kind k, const char* what) {
    if (peek().kind != k)
      throw ConfigParseError(std::string("expected ") + what + " at line " +
                             std::to_string(peek().line));
    take();
  }

  ConfigValue parse_value() {
    skip_newlines();
    const Token& t = peek();
    if (t.kind == Token::String) return ConfigValue{take().text};
    if (t.kind == Token::LBrace) {
      take();
      ConfigTable tbl;
      skip_newlines();
      while (peek().kind != Token::RBrace) {
        skip_newlines();
        if (peek().kind != Token::Bare && peek().kind != Token::String)
          throw ConfigParseError("expected key in inline table at line " +
                                 std::to_string(peek().line));
        std::string key = take().text;
        skip_newlines();
        expect(Token::Equals, "'='");
        tbl[key] = parse_value();
        skip_newlines();
        if (peek().kind == Token::Comma) {
          take();
          skip_newlines();
        }
      }
      expect(Token::RBrace, "'}'");
      return ConfigValue{tbl};
    }
    if (t.kind == Token::LBracket) {
      take();
      ConfigArray arr;
      skip_newlines();
      while (peek().kind != Token::RBracket) {
        arr.push_back(parse_value());
        skip_newlines();
        if (peek().kind == Token::Comma) {
          take();
          skip_newlines();
        }
      }
      expect(Token::RBracket, "']'");
      return ConfigValue{arr};
    }
    if (t.kind == Token::Bare) {
      std::string s = take().text;
      if (s == "true") return ConfigValue{true};
      if (s == "false") return ConfigValue{false};
      double d{};
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
      if (ec == std::errc() && p == s.data() + s.size()) return ConfigValue{d};
      throw ConfigParseError("cannot parse value '" + s + "' at line " + std::to_string(t.line));
    }
    throw ConfigParseError("unexpected token at line " + std::to_string(t.line));
  }

  ParsedConfig parse_document() {
    ParsedConfig doc;
    ConfigTable* current = nullptr;
    std::string current_section;
    for (;;) {
      skip_newlines();
      if (peek().kind == Token::End) break;
      if (peek().kind == Token::LBracket) {
        take();
        std::vector<std::string> path;
        for (;;) {
          if (peek().kind != Token::Bare)
            throw ConfigParseError("expected section name at line " + std::to_string(peek().line));
          path.push_back(take().text);
          if (peek().kind == Token::Dot) {
            take();
            continue;
          }
          break;
        }
        expect(Token::RBracket, "']'");
        if (path[0] == "model" && path.size() == 1) {
          current = &doc.model;
        } else if (path[0] == "output" && path.size() == 1) {
          current = &doc.output;
        } else if (path[0] == "task" && path.size() == 2) {
          doc.tasks.emplace_back(path[1], ConfigTable{});
          current = &doc.tasks.back().second;
        } else {
          throw ConfigParseError("unknown section at line " + std::to_string(peek().line) +
                                 " (expected [model], [output] or [task.<name>])");
        }
        continue;
      }
      if (current == nullptr)
        throw ConfigParseError("key outside any section at line " + std::to_string(peek().line));
      if (peek().kind != Token::Bare && peek().kind != Token::String)
        throw ConfigParseError("expected key at line " + std::to_string(peek().line));
      std::string key = take().text;
      expect(Token::Equals, "'='");
      (*current)[key] = parse_value();
      if (peek().kind != Token::Newline && peek().kind != Token::End)
        throw ConfigParseError("trailing tokens after value at line " + std::to_string(peek().line));
    }
    return doc;
  }
};

}  // namespace

ParsedConfig parse_config_text(const std::string& text) {
  Parser p(text);
  return p.parse_document();
}

// ---------------------------------------------------------------------------
// Canonical serialization

std::string format_double(double v) {
  if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 9.007199254740992e15) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.0f", v);
    return buf;
  }
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

void write_value(std::ostream& os, const ConfigValue& v) {
  if (v.is_bool()) {
    os << (std::get<bool>(v.v) ? "true" : "false");
  } else if (v.is_number()) {
    os << format_double(std::get<double>(v.v));
  } else if (v.is_string()) {
    os << '"';
    for (char c : std::get<std::string>(v.v)) {
      if (c == '"' || c == '\\') os << '\\';
      os << c;
    }
    os << '"';
  } else if (v.is_array()) {
    os << "[";
    const auto& arr = std::get<ConfigArray>(v.v);
    for (size_t i = 0; i < arr.size(); ++i) {
      if (i) os << ", ";
      write_value(os, arr[i]);
    }
    os << "]";
  } else {
    os << "{ ";
    const auto& tbl = std::get<ConfigTable>(v.v);
    bool first = true;
    for (auto& [k, val] : tbl) {
      if (!first) os << ", ";
      first = false;
      os << k << " = ";
      write_value(os, val);
    }
    os << " }";
  }
}

void write_section(std::ostream& os, const std::string& header, const ConfigTable& tbl) {
  os << "[" << header << "]\n";
  for (auto& [k, v] : tbl) {
    os << k << " = ";
    write_value(os, v);
    os << "\n";
  }
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ParsedConfig doc = parse_config_text(text);
  ExperimentConfig cfg;
  cfg.model = doc.model;
  if (cfg.model.empty()) throw ConfigParseError("config: missing [model] section");
  if (auto it = doc.output.find("dir"); it != doc.output.end())
    cfg.output_dir = it->second.string("output.dir");
  else if (const char* env = std::getenv("BRW_OUT_DIR"); env != nullptr)
    cfg.output_dir = env;
  if (auto it = doc.output.find("seed"); it != doc.output.end())
    cfg.seed = static_cast<std::uint64_t>(it->second.number("output.seed"));
  if (auto it = doc.output.find("jobs"); it != doc.output.end())
    cfg.jobs = static_cast<int>(it->second.number("output.jobs"));
  for (auto& [name, tbl] : doc.tasks) {
    TaskSpec task;
    task.name = name;
    auto it = tbl.find("kind");
    if (it == tbl.end()) throw ConfigParseError("task." + name + ": missing kind");
    task.kind = it->second.string("task." + name + ".kind");
    task.params = tbl;
    task.params.erase("kind");
    cfg.tasks.push_back(std::move(task));
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigParseError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream os;
  write_section(os, "model", model);
  os << "\n";
  ConfigTable out;
  out["dir"] = ConfigValue{output_dir};
  out["jobs"] = ConfigValue{static_cast<double>(jobs)};
  out["seed"] = ConfigValue{static_cast<double>(seed)};
  write_section(os, "output", out);
  for (auto& task : tasks) {
    os << "\n";
    ConfigTable tbl = task.params;
    tbl["kind"] = ConfigValue{task.kind};
    write_section(os, "task." + task.name, tbl);
  }
  return os.str();
}

std::string ExperimentConfig::hash() const {
  std::ostringstream os;
  write_section(os, "model", model);
  os << "seed = " << seed << "\n";
  for (auto& task : tasks) {
    ConfigTable tbl = task.params;
    tbl["kind"] = ConfigValue{task.kind};
    write_section(os, "task." + task.name, tbl);
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(os.str())));
  return buf;
}

// ---------------------------------------------------------------------------
// Model construction

OffspringLaw offspring_from_config(const ConfigValue& v) {
  const ConfigTable& tbl = v.table("model.offspring");
  std::vector<std::pair<int, double>> probs;
  if (auto it = tbl.find("probs"); it != tbl.end()) {
    for (auto& entry : it->second.array("offspring.probs")) {
      const auto& pair = entry.array("offspring.probs entry");
      if (pair.size() != 2) throw ConfigParseError("offspring.probs entries must be [k, p]");
      probs.emplace_back(static_cast<int>(pair[0].number("k")), pair[1].number("p"));
    }
  } else {
    for (auto& [k, val] : tbl) {
      if (k.size() < 2 || k[0] != 'p')
        throw ConfigParseError("offspring: unknown key '" + k + "' (use pK or probs)");
      probs.emplace_back(std::stoi(k.substr(1)), val.number("offspring." + k));
    }
  }
  return OffspringLaw(probs);
}

StepLaw step_from_config(const ConfigValue& v) {
  const ConfigTable& tbl = v.table("model.step");
  auto it = tbl.find("family");
  if (it == tbl.end()) throw ConfigParseError("step: missing family");
  const std::string& fam = it->second.string("step.family");
  auto num = [&](const char* key) {
    auto f = tbl.find(key);
    if (f == tbl.end())
      throw ConfigParseError("step(" + fam + "): missing parameter '" + key + "'");
    return f->second.number(std::string("step.") + key);
  };
  if (fam == "rademacher") return StepLaw::rademacher(num("s"));
  if (fam == "gaussian") return StepLaw::gaussian(num("sigma"));
  if (fam == "neg_weibull")
    return StepLaw::neg_weibull(num("lambda"), num("alpha"), num("q"), num("x0"));
  if (fam == "neg_pareto") return StepLaw::neg_pareto(num("alpha"), num("q"), num("x0"));
  if (fam == "neg_gumbel") return StepLaw::neg_gumbel(num("alpha"), num("x0"));
  if (fam == "finite") {
    auto f = tbl.find("points");
    if (f == tbl.end()) throw ConfigParseError("step(finite): missing points");
    std::vector<std::pair<double, double>> pts;
    for (auto& entry : f->second.array("step.points")) {
      const auto& pair = entry.array("step.points entry");
      if (pair.size() != 2) throw ConfigParseError("step.points entries must be [x, p]");
      pts.emplace_back(pair[0].number("x"), pair[1].number("p"));
    }
    return StepLaw::finite_support(pts);
  }
  throw ConfigParseError("step: unknown family '" + fam + "'");
}

ModelSpec ExperimentConfig::build_model() const { return build_model_with({}); }

ModelSpec ExperimentConfig::build_model_with(const ConfigTable& overrides) const {
  ConfigTable merged = model;
  for (auto& [k, v] : overrides) merged[k] = v;
  auto need = [&](const char* key) -> const ConfigValue& {
    auto it = merged.find(key);
    if (it == merged.end()) throw ConfigParseError(std::string("model: missing '") + key + "'");
    return it->second;
  };
  OffspringLaw off = offspring_from_config(need("offspring"));
  StepLaw step = step_from_config(need("step"));
  double theta = need("theta").number("model.theta");
  double a = need("a").number("model.a");
  return ModelSpec::make(std::move(off), std::move(step), theta, a);
}

}  // namespace brw
