#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ragopt {

/// Prompt templates keyed by task name. Each template starts with a
/// "[task: <name>]" marker line; the offline stub providers dispatch on it
/// and live endpoints ignore it. Placeholders use {name} syntax.
class TemplateSet {
 public:
  /// The compiled-in defaults (identical to the files under templates/).
  static TemplateSet builtin();

  /// Builtin set with any *.txt files in dir overriding by basename.
  static TemplateSet load_dir(const std::filesystem::path& dir);

  const std::string& get(const std::string& name) const;

  std::string render(const std::string& name, const std::map<std::string, std::string>& vars) const;

  std::vector<std::string> names() const;

 private:
  std::map<std::string, std::string> templates_;
};

/// Replaces every "{key}" occurrence; unknown placeholders are left intact.
std::string render_template(const std::string& text, const std::map<std::string, std::string>& vars);

}  // namespace ragopt
