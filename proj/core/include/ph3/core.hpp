#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ph3 {

using TokenId = std::int32_t;

/// Base class for every error this library throws.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationError : Error {
  using Error::Error;
};
struct MissingSlotValue : ValidationError {
  using ValidationError::ValidationError;
};
struct TokenOutOfRange : Error {
  using Error::Error;
};
struct SequenceTooLong : Error {
  using Error::Error;
};
struct RemoteUnavailable : Error {
  using Error::Error;
};
struct EnumerationTooLarge : Error {
  using Error::Error;
};
struct EtaExceedsMatrix : Error {
  using Error::Error;
};
struct MalformedLine : Error {
  MalformedLine(std::size_t line_no, const std::string& what)
      : Error("line " + std::to_string(line_no) + ": " + what), line_no(line_no) {}
  std::size_t line_no;
};
struct UnknownLabel : Error {
  UnknownLabel(std::size_t line_no, const std::string& label)
      : Error("line " + std::to_string(line_no) + ": unknown label '" + label + "'"),
        line_no(line_no) {}
  std::size_t line_no;
};
struct IoError : Error {
  using Error::Error;
};

/// Token inventory of a backend: size, the designated placeholder token and
/// a detokenization map. Immutable after construction.
struct Vocab {
  std::size_t size = 0;
  TokenId placeholder_id = 0;
  std::vector<std::string> surfaces;  // one per token index, may be empty strings

  void validate() const;
  const std::string& surface(TokenId t) const;
};

/// One class of a classification task: the tokens whose probability counts
/// toward it and the surface strings that identify it in generated text.
struct ClassDef {
  std::string name;
  std::vector<TokenId> tokens;        // non-empty, sorted, unique
  std::vector<std::string> surfaces;  // non-empty
};

struct LabelSpec {
  std::vector<ClassDef> classes;

  std::size_t num_classes() const { return classes.size(); }
  // Throws ValidationError on <2 classes, duplicate names, overlapping or
  // out-of-range token sets.
  void validate(std::size_t vocab_size) const;
  std::optional<std::size_t> index_of(std::string_view class_name) const;
};

struct Sample {
  std::string text;
  std::optional<std::string> title;
  std::optional<std::string> gold_label;
};

/// A prompt string with {text} and {title} slots. The null template is the
/// literal "{text}" (or "{title} {text}" when titles exist).
class PromptTemplate {
 public:
  PromptTemplate() : template_("{text}") {}
  explicit PromptTemplate(std::string tmpl);

  static PromptTemplate null_template(bool with_title = false);

  const std::string& str() const { return template_; }
  bool uses_title() const { return uses_title_; }

  /// Substitutes every slot verbatim; no other characters change.
  std::string render(const Sample& sample) const;
  /// Render with an explicit text value (content-free calibration inputs).
  std::string render_text(std::string_view text,
                          std::string_view title = "") const;

 private:
  std::string template_;
  bool uses_title_ = false;
};

bool operator==(const PromptTemplate& a, const PromptTemplate& b);

std::string render_prompt(const PromptTemplate& tmpl, const Sample& sample);

/// Prompt-set file: UTF-8, one template per line; a blank line denotes the
/// null template.
std::vector<PromptTemplate> load_prompt_set(const std::string& path,
                                            bool with_titles = false);

/// Label-spec file: JSON object {class_name: {"tokens":[ids], "surfaces":[strings]}}.
/// Class order follows file order.
LabelSpec load_label_spec(const std::string& path);
LabelSpec parse_label_spec(const std::string& json_text);

}  // namespace ph3
