// Copyright 2026 mosprob Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mosprob/model_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace mosprob
{

ParseError::ParseError(SourceLoc loc, const std::string & message)
: ModelError(std::to_string(loc.line) + ":" + std::to_string(loc.column) + ": " + message),
  loc_(loc),
  message_(message)
{
}

namespace
{

constexpr double kMassSlack = 1e-9;

// ---------------------------------------------------------------- lexer

enum class Tok { kWord, kString, kPunct, kArrow, kEnd };

struct Token
{
  Tok kind = Tok::kEnd;
  std::string text;
  SourceLoc loc;
};

bool word_char(char c)
{
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' || c == '.' || c == '-' ||
         c == '+';
}

bool is_punct(char c)
{
  return c == '{' || c == '}' || c == '(' || c == ')' || c == ',' || c == ':' || c == '=' || c == '&';
}

std::vector<Token> lex_line(std::string_view line, std::size_t line_no)
{
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    const SourceLoc loc{line_no, i + 1};
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
    } else if (c == '#') {
      break;
    } else if (c == '-' && i + 1 < line.size() && line[i + 1] == '>') {
      out.push_back({Tok::kArrow, "->", loc});
      i += 2;
    } else if (is_punct(c)) {
      out.push_back({Tok::kPunct, std::string(1, c), loc});
      ++i;
    } else if (c == '"') {
      std::string text;
      ++i;
      bool closed = false;
      while (i < line.size()) {
        const char d = line[i];
        if (d == '"') {
          closed = true;
          ++i;
          break;
        }
        if (d == '\\') {
          if (i + 1 >= line.size()) {
            break;
          }
          const char e = line[i + 1];
          if (e == 'n') {
            text.push_back('\n');
          } else if (e == 't') {
            text.push_back('\t');
          } else if (e == '"' || e == '\\') {
            text.push_back(e);
          } else {
            throw ParseError({line_no, i + 1}, std::string("unknown escape \\") + e);
          }
          i += 2;
          continue;
        }
        text.push_back(d);
        ++i;
      }
      if (!closed) {
        throw ParseError(loc, "unterminated string");
      }
      out.push_back({Tok::kString, std::move(text), loc});
    } else if (word_char(c)) {
      std::size_t j = i;
      while (j < line.size() && word_char(line[j]) && !(line[j] == '-' && j + 1 < line.size() && line[j + 1] == '>')) {
        ++j;
      }
      out.push_back({Tok::kWord, std::string(line.substr(i, j - i)), loc});
      i = j;
    } else {
      throw ParseError(loc, std::string("unexpected character '") + c + "'");
    }
  }
  out.push_back({Tok::kEnd, "", {line_no, line.size() + 1}});
  return out;
}

class Cursor
{
public:
  explicit Cursor(std::vector<Token> toks) : toks_(std::move(toks)) {}

  const Token & peek() const { return toks_[pos_]; }
  bool at_end() const { return peek().kind == Tok::kEnd; }

  bool accept(std::string_view punct)
  {
    if ((peek().kind == Tok::kPunct || peek().kind == Tok::kArrow) && peek().text == punct) {
      ++pos_;
      return true;
    }
    return false;
  }

  bool accept_word(std::string_view word)
  {
    if (peek().kind == Tok::kWord && peek().text == word) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(std::string_view punct)
  {
    if (!accept(punct)) {
      fail("expected '" + std::string(punct) + "'");
    }
  }

  Token name(const char * what)
  {
    if (peek().kind != Tok::kWord && peek().kind != Tok::kString) {
      fail(std::string("expected ") + what);
    }
    return toks_[pos_++];
  }

  double number(const char * what)
  {
    if (peek().kind != Tok::kWord) {
      fail(std::string("expected ") + what);
    }
    const Token & t = peek();
    char * end = nullptr;
    const double x = std::strtod(t.text.c_str(), &end);
    if (end != t.text.c_str() + t.text.size() || t.text.empty()) {
      fail(std::string("expected ") + what + ", got '" + t.text + "'");
    }
    ++pos_;
    return x;
  }

  void finish()
  {
    if (!at_end()) {
      fail("unexpected '" + peek().text + "'");
    }
  }

  [[noreturn]] void fail(const std::string & message) const { throw ParseError(peek().loc, message); }

private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------- names

const char * origin_word(ActionOrigin o)
{
  switch (o) {
    case ActionOrigin::kPerceptionInput:
      return "input";
    case ActionOrigin::kReachabilityChoice:
      return "choice";
    case ActionOrigin::kInternal:
      return "internal";
  }
  return "internal";
}

std::optional<ActionOrigin> origin_from(std::string_view w)
{
  if (w == "input") {
    return ActionOrigin::kPerceptionInput;
  }
  if (w == "choice") {
    return ActionOrigin::kReachabilityChoice;
  }
  if (w == "internal") {
    return ActionOrigin::kInternal;
  }
  return std::nullopt;
}

const char * direction_word(KeyDirection d)
{
  switch (d) {
    case KeyDirection::kHigherSafer:
      return "higher";
    case KeyDirection::kLowerSafer:
      return "lower";
    case KeyDirection::kTowardMiddle:
      return "toward";
    case KeyDirection::kAwayFromMiddle:
      return "away";
  }
  return "higher";
}

std::optional<KeyDirection> direction_from(std::string_view w)
{
  if (w == "higher") {
    return KeyDirection::kHigherSafer;
  }
  if (w == "lower") {
    return KeyDirection::kLowerSafer;
  }
  if (w == "toward") {
    return KeyDirection::kTowardMiddle;
  }
  if (w == "away") {
    return KeyDirection::kAwayFromMiddle;
  }
  return std::nullopt;
}

bool needs_middle(KeyDirection d)
{
  return d == KeyDirection::kTowardMiddle || d == KeyDirection::kAwayFromMiddle;
}

std::string quote(const std::string & s)
{
  bool bare = !s.empty();
  for (std::size_t i = 0; bare && i < s.size(); ++i) {
    bare = word_char(s[i]) && !(s[i] == '-' && i + 1 < s.size() && s[i + 1] == '>');
  }
  if (bare) {
    return s;
  }
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"' || c == '\\') {
      out.push_back('\\');
      out.push_back(c);
    } else if (c == '\n') {
      out += "\\n";
    } else if (c == '\t') {
      out += "\\t";
    } else {
      out.push_back(c);
    }
  }
  out.push_back('"');
  return out;
}

std::string num(double x)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// ---------------------------------------------------------------- checks

void check_document(const ModelDocument & doc, SourceLoc end = {})
{
  if (doc.version != kModelFormatVersion) {
    throw ParseError({}, "unsupported format version " + std::to_string(doc.version));
  }
  std::set<std::string> features;
  for (const auto & f : doc.features) {
    if (!features.insert(f).second) {
      throw ParseError({}, "duplicate feature " + f);
    }
  }
  std::set<std::string> actions;
  for (const auto & a : doc.actions) {
    if (!actions.insert(a.name).second) {
      throw ParseError(a.loc, "duplicate action " + a.name);
    }
  }
  if (doc.states.empty()) {
    throw ParseError(end, "no states declared");
  }
  std::set<std::string> states;
  std::size_t initials = 0;
  for (const auto & s : doc.states) {
    if (!states.insert(s.name).second) {
      throw ParseError(s.loc, "duplicate state " + s.name);
    }
    if (s.features.size() != doc.features.size()) {
      throw ParseError(
        s.loc, "state " + s.name + " has " + std::to_string(s.features.size()) + " feature values, expected " +
                 std::to_string(doc.features.size()));
    }
    initials += s.initial ? 1 : 0;
    if (initials > 1) {
      throw ParseError(s.loc, "more than one initial state");
    }
  }
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto & t : doc.transitions) {
    if (states.count(t.source) == 0) {
      throw ParseError(t.loc, "unknown state " + t.source);
    }
    if (actions.count(t.action) == 0) {
      throw ParseError(t.loc, "unknown action " + t.action);
    }
    if (!seen.insert({t.source, t.action}).second) {
      throw ParseError(t.loc, "duplicate transition for (" + t.source + ", " + t.action + ")");
    }
    if (t.dest.empty()) {
      throw ParseError(t.loc, "empty distribution");
    }
    double mass = 0.0;
    std::set<std::string> dests;
    for (const auto & [d, p] : t.dest) {
      if (states.count(d) == 0) {
        throw ParseError(t.loc, "unknown state " + d);
      }
      if (!dests.insert(d).second) {
        throw ParseError(t.loc, "duplicate destination " + d);
      }
      if (!(p >= 0.0 && p <= 1.0)) {
        throw ParseError(t.loc, "probability " + num(p) + " outside [0, 1]");
      }
      mass += p;
    }
    if (std::abs(mass - 1.0) > kMassSlack) {
      throw ParseError(t.loc, "probability mass " + num(mass) + " differs from 1");
    }
  }
  std::set<std::string> orders;
  for (const auto & o : doc.orders) {
    if (!orders.insert(o.name).second) {
      throw ParseError(o.loc, "duplicate order " + o.name);
    }
    if (o.terms.empty()) {
      throw ParseError(o.loc, "order " + o.name + " has no terms");
    }
    for (const auto & term : o.terms) {
      if (features.count(term.feature) == 0) {
        throw ParseError(o.loc, "order " + o.name + " uses undeclared feature " + term.feature);
      }
    }
  }
  if (doc.property && doc.property->bad_label.empty()) {
    throw ParseError({}, "property without bad label");
  }
}

// ---------------------------------------------------------------- sections

enum class Section { kNone, kMeta, kFeatures, kActions, kStates, kTransitions, kProperty, kOrders };

std::optional<Section> section_from(std::string_view w)
{
  static const std::map<std::string_view, Section> table{
    {"meta", Section::kMeta},         {"features", Section::kFeatures}, {"actions", Section::kActions},
    {"states", Section::kStates},     {"transitions", Section::kTransitions},
    {"property", Section::kProperty}, {"orders", Section::kOrders}};
  const auto it = table.find(w);
  if (it == table.end()) {
    return std::nullopt;
  }
  return it->second;
}

void parse_state(Cursor & c, ModelDocument & doc)
{
  DocState s;
  const Token name = c.name("state name");
  s.name = name.text;
  s.loc = name.loc;
  s.initial = c.accept_word("initial");
  if (c.accept("{")) {
    if (!c.accept("}")) {
      do {
        s.labels.push_back(c.name("label").text);
      } while (c.accept(","));
      c.expect("}");
    }
  }
  if (c.accept("(")) {
    if (!c.accept(")")) {
      do {
        s.features.push_back(c.number("feature value"));
      } while (c.accept(","));
      c.expect(")");
    }
  }
  c.finish();
  doc.states.push_back(std::move(s));
}

void parse_transition(Cursor & c, ModelDocument & doc)
{
  DocTransition t;
  const Token src = c.name("source state");
  t.loc = src.loc;
  t.source = src.text;
  t.action = c.name("action").text;
  c.expect("->");
  t.loc = c.peek().loc;
  c.expect("{");
  do {
    std::string dest = c.name("destination state").text;
    c.expect(":");
    t.dest.emplace_back(std::move(dest), c.number("probability"));
  } while (c.accept(","));
  c.expect("}");
  c.finish();
  doc.transitions.push_back(std::move(t));
}

void parse_order(Cursor & c, ModelDocument & doc)
{
  DocOrder o;
  const Token name = c.name("order name");
  o.name = name.text;
  o.loc = name.loc;
  c.expect("=");
  do {
    KeyTerm term;
    term.feature = c.name("feature").text;
    const Token dir = c.name("direction");
    const auto d = direction_from(dir.text);
    if (!d) {
      throw ParseError(dir.loc, "unknown direction '" + dir.text + "' (higher, lower, toward, away)");
    }
    term.direction = *d;
    if (needs_middle(*d)) {
      term.middle = c.number("middle value");
    }
    o.terms.push_back(std::move(term));
  } while (c.accept("&"));
  c.finish();
  doc.orders.push_back(std::move(o));
}

}  // namespace

ModelDocument parse_model(std::string_view text)
{
  ModelDocument doc;
  Section section = Section::kNone;
  std::set<Section> visited;
  bool header = false;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    const std::size_t first = line.find_first_not_of(" \t\r");
    const bool is_section = header && first != std::string_view::npos && line[first] == '[';
    Cursor c(lex_line(is_section ? std::string_view{} : line, line_no));
    if (!is_section && c.at_end()) {
      continue;
    }
    if (!header) {
      if (!c.accept_word("mosmodel")) {
        c.fail("expected header 'mosmodel <version>'");
      }
      const Token v = c.peek();
      doc.version = static_cast<int>(c.number("format version"));
      if (doc.version != kModelFormatVersion) {
        throw ParseError(v.loc, "unsupported format version " + v.text);
      }
      c.finish();
      header = true;
      continue;
    }
    // Section headers are plain "[name]" lines.
    if (is_section) {
      const std::size_t close = line.find(']', first);
      if (close == std::string_view::npos) {
        throw ParseError({line_no, first + 1}, "unterminated section header");
      }
      const auto sec = section_from(line.substr(first + 1, close - first - 1));
      if (!sec) {
        throw ParseError({line_no, first + 2}, "unknown section " + std::string(line.substr(first, close - first + 1)));
      }
      if (!visited.insert(*sec).second) {
        throw ParseError({line_no, first + 1}, "section repeated");
      }
      Cursor rest(lex_line(line.substr(close + 1), line_no));
      if (!rest.at_end()) {
        throw ParseError({line_no, close + 2}, "text after section header");
      }
      section = *sec;
      if (section == Section::kProperty) {
        doc.property = SafetyProperty{};
      }
      continue;
    }
    switch (section) {
      case Section::kNone:
        c.fail("content before the first section");
      case Section::kMeta: {
        std::string key = c.name("key").text;
        c.expect("=");
        std::string value = c.name("value").text;
        c.finish();
        doc.meta.emplace_back(std::move(key), std::move(value));
        break;
      }
      case Section::kFeatures:
        while (!c.at_end()) {
          const Token f = c.name("feature name");
          if (std::find(doc.features.begin(), doc.features.end(), f.text) != doc.features.end()) {
            throw ParseError(f.loc, "duplicate feature " + f.text);
          }
          doc.features.push_back(f.text);
        }
        break;
      case Section::kActions: {
        DocAction a;
        const Token name = c.name("action name");
        a.name = name.text;
        a.loc = name.loc;
        const Token o = c.name("action origin");
        const auto origin = origin_from(o.text);
        if (!origin) {
          throw ParseError(o.loc, "unknown origin '" + o.text + "' (input, choice, internal)");
        }
        a.origin = *origin;
        c.finish();
        doc.actions.push_back(std::move(a));
        break;
      }
      case Section::kStates:
        parse_state(c, doc);
        break;
      case Section::kTransitions:
        parse_transition(c, doc);
        break;
      case Section::kProperty: {
        const Token key = c.name("property key");
        c.expect("=");
        if (key.text == "bad") {
          doc.property->bad_label = c.name("label").text;
        } else if (key.text == "horizon") {
          const Token h = c.peek();
          const double x = c.number("horizon");
          if (x < 0.0 || x != std::floor(x)) {
            throw ParseError(h.loc, "horizon must be a non-negative integer");
          }
          doc.property->horizon = static_cast<std::size_t>(x);
        } else {
          throw ParseError(key.loc, "unknown property key " + key.text);
        }
        c.finish();
        break;
      }
      case Section::kOrders:
        parse_order(c, doc);
        break;
    }
  }
  if (!header) {
    throw ParseError({line_no, 1}, "missing header 'mosmodel <version>'");
  }
  check_document(doc, {line_no, 1});
  return doc;
}

std::string serialize_model(const ModelDocument & doc)
{
  std::ostringstream out;
  out << "mosmodel " << doc.version << "\n";
  if (!doc.meta.empty()) {
    out << "\n[meta]\n";
    for (const auto & [k, v] : doc.meta) {
      out << quote(k) << " = " << quote(v) << "\n";
    }
  }
  out << "\n[features]\n";
  for (const auto & f : doc.features) {
    out << quote(f) << "\n";
  }
  out << "\n[actions]\n";
  for (const auto & a : doc.actions) {
    out << quote(a.name) << " " << origin_word(a.origin) << "\n";
  }
  out << "\n[states]\n";
  for (const auto & s : doc.states) {
    out << quote(s.name) << (s.initial ? " initial" : "") << " {";
    for (std::size_t i = 0; i < s.labels.size(); ++i) {
      out << (i ? ", " : "") << quote(s.labels[i]);
    }
    out << "} (";
    for (std::size_t i = 0; i < s.features.size(); ++i) {
      out << (i ? ", " : "") << num(s.features[i]);
    }
    out << ")\n";
  }
  out << "\n[transitions]\n";
  for (const auto & t : doc.transitions) {
    out << quote(t.source) << " " << quote(t.action) << " -> {";
    for (std::size_t i = 0; i < t.dest.size(); ++i) {
      out << (i ? ", " : "") << quote(t.dest[i].first) << ": " << num(t.dest[i].second);
    }
    out << "}\n";
  }
  if (doc.property) {
    out << "\n[property]\nbad = " << quote(doc.property->bad_label) << "\n";
    if (doc.property->horizon) {
      out << "horizon = " << *doc.property->horizon << "\n";
    }
  }
  out << "\n[orders]\n";
  for (const auto & o : doc.orders) {
    out << quote(o.name) << " =";
    for (std::size_t i = 0; i < o.terms.size(); ++i) {
      const auto & term = o.terms[i];
      out << (i ? " & " : " ") << quote(term.feature) << " " << direction_word(term.direction);
      if (needs_middle(term.direction)) {
        out << " " << num(term.middle);
      }
    }
    out << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------- JSON

std::string model_to_json(const ModelDocument & doc, int indent)
{
  using nlohmann::json;
  json j;
  j["format"] = "mosmodel";
  j["version"] = doc.version;
  j["meta"] = json::array();
  for (const auto & [k, v] : doc.meta) {
    j["meta"].push_back({{"key", k}, {"value", v}});
  }
  j["features"] = doc.features;
  j["actions"] = json::array();
  for (const auto & a : doc.actions) {
    j["actions"].push_back({{"name", a.name}, {"origin", origin_word(a.origin)}});
  }
  j["states"] = json::array();
  for (const auto & s : doc.states) {
    j["states"].push_back(
      {{"name", s.name}, {"initial", s.initial}, {"labels", s.labels}, {"features", s.features}});
  }
  j["transitions"] = json::array();
  for (const auto & t : doc.transitions) {
    json dest = json::array();
    for (const auto & [d, p] : t.dest) {
      dest.push_back({{"state", d}, {"prob", p}});
    }
    j["transitions"].push_back({{"source", t.source}, {"action", t.action}, {"dest", dest}});
  }
  if (doc.property) {
    json p{{"bad", doc.property->bad_label}};
    p["horizon"] = doc.property->horizon ? json(*doc.property->horizon) : json(nullptr);
    j["property"] = p;
  } else {
    j["property"] = nullptr;
  }
  j["orders"] = json::array();
  for (const auto & o : doc.orders) {
    json terms = json::array();
    for (const auto & term : o.terms) {
      json t{{"feature", term.feature}, {"direction", direction_word(term.direction)}};
      if (needs_middle(term.direction)) {
        t["middle"] = term.middle;
      }
      terms.push_back(t);
    }
    j["orders"].push_back({{"name", o.name}, {"terms", terms}});
  }
  return j.dump(indent) + "\n";
}

namespace
{

SourceLoc offset_loc(std::string_view text, std::size_t offset)
{
  SourceLoc loc{1, 1};
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++loc.line;
      loc.column = 1;
    } else {
      ++loc.column;
    }
  }
  return loc;
}

}  // namespace

ModelDocument model_from_json(std::string_view text)
{
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error & e) {
    throw ParseError(offset_loc(text, e.byte == 0 ? 0 : e.byte - 1), e.what());
  }
  ModelDocument doc;
  try {
    if (j.value("format", "") != "mosmodel") {
      throw ParseError({}, "not a mosmodel document");
    }
    doc.version = j.at("version").get<int>();
    for (const auto & m : j.at("meta")) {
      doc.meta.emplace_back(m.at("key").get<std::string>(), m.at("value").get<std::string>());
    }
    doc.features = j.at("features").get<std::vector<std::string>>();
    for (std::size_t i = 0; i < j.at("actions").size(); ++i) {
      const auto & a = j["actions"][i];
      const auto origin = origin_from(a.at("origin").get<std::string>());
      if (!origin) {
        throw ParseError({}, "/actions/" + std::to_string(i) + ": unknown origin");
      }
      doc.actions.push_back({a.at("name").get<std::string>(), *origin, {}});
    }
    for (const auto & s : j.at("states")) {
      doc.states.push_back(
        {s.at("name").get<std::string>(), s.value("initial", false),
         s.at("labels").get<std::vector<std::string>>(), s.at("features").get<std::vector<double>>(), {}});
    }
    for (const auto & t : j.at("transitions")) {
      DocTransition tr;
      tr.source = t.at("source").get<std::string>();
      tr.action = t.at("action").get<std::string>();
      for (const auto & d : t.at("dest")) {
        tr.dest.emplace_back(d.at("state").get<std::string>(), d.at("prob").get<double>());
      }
      doc.transitions.push_back(std::move(tr));
    }
    if (!j.at("property").is_null()) {
      SafetyProperty p;
      p.bad_label = j["property"].at("bad").get<std::string>();
      const auto & h = j["property"].value("horizon", json(nullptr));
      if (!h.is_null()) {
        p.horizon = h.get<std::size_t>();
      }
      doc.property = p;
    }
    for (std::size_t i = 0; i < j.at("orders").size(); ++i) {
      const auto & o = j["orders"][i];
      DocOrder order;
      order.name = o.at("name").get<std::string>();
      for (const auto & t : o.at("terms")) {
        KeyTerm term;
        term.feature = t.at("feature").get<std::string>();
        const auto d = direction_from(t.at("direction").get<std::string>());
        if (!d) {
          throw ParseError({}, "/orders/" + std::to_string(i) + ": unknown direction");
        }
        term.direction = *d;
        if (needs_middle(*d)) {
          term.middle = t.at("middle").get<double>();
        }
        order.terms.push_back(std::move(term));
      }
      doc.orders.push_back(std::move(order));
    }
  } catch (const json::exception & e) {
    throw ParseError({}, std::string("JSON schema: ") + e.what());
  }
  check_document(doc);
  return doc;
}

ModelDocument load_model_file(const std::string & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ModelError("cannot open " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  const bool json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
  return json ? model_from_json(buf.str()) : parse_model(buf.str());
}

void save_model_file(const ModelDocument & doc, const std::string & path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ModelError("cannot write " + path);
  }
  const bool json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
  out << (json ? model_to_json(doc) : serialize_model(doc));
}

// ---------------------------------------------------------------- lowering

LoweredModel lower(const ModelDocument & doc)
{
  check_document(doc);
  if (!doc.property) {
    throw ModelError("document has no [property] section");
  }
  LoweredModel out;
  Pa & m = out.pa;
  m.set_feature_names(doc.features);
  std::unordered_map<std::string, StateId> ids;
  StateId initial = 0;
  for (const auto & s : doc.states) {
    const StateId id = m.add_state(s.name, s.labels, s.features);
    ids.emplace(s.name, id);
    if (s.initial) {
      initial = id;
    }
  }
  m.set_initial(initial);
  for (const auto & a : doc.actions) {
    m.intern_action(a.name, a.origin);
  }
  for (const auto & t : doc.transitions) {
    Distribution mu;
    for (const auto & [d, p] : t.dest) {
      mu.support.emplace_back(ids.at(d), p);
    }
    m.add_transition(ids.at(t.source), *m.find_action(t.action), std::move(mu));
  }
  const auto problems = validate(m);
  if (!problems.empty()) {
    throw ModelError("lowered model is invalid: " + problems.front());
  }
  const auto reach = reachable_states(m);
  for (StateId s = 0; s < m.num_states(); ++s) {
    if (!reach[s]) {
      out.warnings.push_back("state " + m.state_name(s) + " is unreachable from the initial state");
    }
  }
  out.property = *doc.property;
  for (const auto & o : doc.orders) {
    out.orders.push_back(PartialOrder::on_keys(o.name, o.terms));
  }
  return out;
}

ModelDocument to_document(
  const Pa & m, const SafetyProperty & psi, const std::vector<PartialOrder> & orders,
  std::vector<std::pair<std::string, std::string>> meta)
{
  ModelDocument doc;
  doc.meta = std::move(meta);
  doc.features = m.feature_names();
  for (const auto & a : m.actions()) {
    doc.actions.push_back({a.name, a.origin, {}});
  }
  // Names must be unique in a document; repeats get the state id appended.
  std::vector<std::string> names(m.num_states());
  std::set<std::string> used;
  for (StateId s = 0; s < m.num_states(); ++s) {
    names[s] = m.state_name(s);
    if (!used.insert(names[s]).second) {
      names[s] += "~" + std::to_string(s);
      used.insert(names[s]);
    }
  }
  for (StateId s = 0; s < m.num_states(); ++s) {
    doc.states.push_back({names[s], s == m.initial(), m.labels(s), m.features(s), {}});
    for (const auto & t : m.transitions(s)) {
      DocTransition tr;
      tr.source = names[s];
      tr.action = m.action(t.action).name;
      for (const auto & [d, p] : t.dist.support) {
        tr.dest.emplace_back(names[d], p);
      }
      doc.transitions.push_back(std::move(tr));
    }
  }
  doc.property = psi;
  for (const auto & o : orders) {
    if (!o.is_key_order()) {
      throw ModelError("order " + o.name() + " is not a key order and cannot be exported");
    }
    doc.orders.push_back({o.name(), o.terms(), {}});
  }
  return doc;
}

}  // namespace mosprob
