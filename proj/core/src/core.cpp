#include "ph3/core.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace ph3 {

void Vocab::validate() const {
  if (size == 0) throw ValidationError("vocab size must be positive");
  if (placeholder_id < 0 || static_cast<std::size_t>(placeholder_id) >= size)
    throw ValidationError("placeholder_id out of range");
  if (surfaces.size() != size)
    throw ValidationError("surface table must cover every token index");
}

const std::string& Vocab::surface(TokenId t) const {
  if (t < 0 || static_cast<std::size_t>(t) >= surfaces.size())
    throw TokenOutOfRange("token " + std::to_string(t) + " has no surface");
  return surfaces[static_cast<std::size_t>(t)];
}

void LabelSpec::validate(std::size_t vocab_size) const {
  if (classes.size() < 2) throw ValidationError("label spec needs at least 2 classes");
  std::set<std::string> names;
  std::set<TokenId> seen_tokens;
  for (const auto& c : classes) {
    if (!names.insert(c.name).second)
      throw ValidationError("duplicate class name '" + c.name + "'");
    if (c.tokens.empty())
      throw ValidationError("class '" + c.name + "' has no tokens");
    if (c.surfaces.empty())
      throw ValidationError("class '" + c.name + "' has no surface forms");
    for (TokenId t : c.tokens) {
      if (t < 0 || static_cast<std::size_t>(t) >= vocab_size)
        throw ValidationError("class token " + std::to_string(t) + " out of range");
      if (!seen_tokens.insert(t).second)
        throw ValidationError("token " + std::to_string(t) +
                              " assigned to more than one class");
    }
  }
}

std::optional<std::size_t> LabelSpec::index_of(std::string_view class_name) const {
  for (std::size_t i = 0; i < classes.size(); ++i)
    if (classes[i].name == class_name) return i;
  return std::nullopt;
}

namespace {

// Slot occurrences of the form {name}; only "text" and "title" are known.
struct Slot {
  std::size_t pos;
  std::size_t len;
  bool is_title;
};

std::vector<Slot> scan_slots(const std::string& tmpl) {
  std::vector<Slot> slots;
  std::size_t i = 0;
  while ((i = tmpl.find('{', i)) != std::string::npos) {
    std::size_t close = tmpl.find('}', i);
    if (close == std::string::npos) break;
    std::string name = tmpl.substr(i + 1, close - i - 1);
    if (name == "text") {
      slots.push_back({i, close - i + 1, false});
    } else if (name == "title") {
      slots.push_back({i, close - i + 1, true});
    } else {
      throw ValidationError("unknown slot '{" + name + "}' in template");
    }
    i = close + 1;
  }
  return slots;
}

}  // namespace

PromptTemplate::PromptTemplate(std::string tmpl) : template_(std::move(tmpl)) {
  for (const auto& s : scan_slots(template_))
    if (s.is_title) uses_title_ = true;
}

PromptTemplate PromptTemplate::null_template(bool with_title) {
  return PromptTemplate(with_title ? "{title} {text}" : "{text}");
}

std::string PromptTemplate::render_text(std::string_view text,
                                        std::string_view title) const {
  std::string out;
  std::size_t last = 0;
  for (const auto& s : scan_slots(template_)) {
    out.append(template_, last, s.pos - last);
    out.append(s.is_title ? title : text);
    last = s.pos + s.len;
  }
  out.append(template_, last, std::string::npos);
  return out;
}

std::string PromptTemplate::render(const Sample& sample) const {
  if (uses_title_ && !sample.title)
    throw MissingSlotValue("template references {title} but sample has no title");
  return render_text(sample.text, sample.title ? *sample.title : "");
}

bool operator==(const PromptTemplate& a, const PromptTemplate& b) {
  return a.str() == b.str();
}

std::string render_prompt(const PromptTemplate& tmpl, const Sample& sample) {
  return tmpl.render(sample);
}

std::vector<PromptTemplate> load_prompt_set(const std::string& path,
                                            bool with_titles) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open prompt set: " + path);
  std::vector<PromptTemplate> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty())
      out.push_back(PromptTemplate::null_template(with_titles));
    else
      out.emplace_back(line);
  }
  return out;
}

LabelSpec parse_label_spec(const std::string& json_text) {
  auto j = nlohmann::ordered_json::parse(json_text);
  if (!j.is_object()) throw ValidationError("label spec must be a JSON object");
  LabelSpec spec;
  for (auto& [name, body] : j.items()) {
    ClassDef c;
    c.name = name;
    for (const auto& t : body.at("tokens")) c.tokens.push_back(t.get<TokenId>());
    for (const auto& s : body.at("surfaces")) c.surfaces.push_back(s.get<std::string>());
    std::sort(c.tokens.begin(), c.tokens.end());
    c.tokens.erase(std::unique(c.tokens.begin(), c.tokens.end()), c.tokens.end());
    spec.classes.push_back(std::move(c));
  }
  return spec;
}

LabelSpec load_label_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open label spec: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_label_spec(ss.str());
}

}  // namespace ph3
