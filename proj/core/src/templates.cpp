#include "ragopt/templates.hpp"

#include <fstream>
#include <sstream>

#include "ragopt/errors.hpp"

namespace ragopt {

namespace {

// Keep in sync with the files under templates/; a unit test compares them.
const std::map<std::string, std::string>& builtin_templates() {
  static const std::map<std::string, std::string> table = {
  {"answer",
   R"TPL([task: answer]
Answer the question using only the numbered context passages. Be concise and factual.
--- context ---
{context}
--- question ---
{question}
--- end ---
Answer:
)TPL"},
  {"judge",
   R"TPL([task: judge]
Rate how correct and complete the answer is compared to the reference, on a scale from 0 to 100. Reply with the number only.
--- question ---
{question}
--- reference ---
{gold_answer}
--- answer ---
{answer}
--- end ---
Score:
)TPL"},
  {"multi_query",
   R"TPL([task: multi_query]
Write {m} alternative phrasings of the question below, each capturing a different angle. One per line, no numbering.
--- question ---
{question}
--- end ---
)TPL"},
  {"rag_fusion",
   R"TPL([task: rag_fusion]
Write {m} distinct search queries whose results together should answer the question. One per line, no numbering.
--- question ---
{question}
--- end ---
)TPL"},
  {"decomposition",
   R"TPL([task: decomposition]
Break the question into at most {m} simpler sub-questions that can be answered independently. One per line, no numbering.
--- question ---
{question}
--- end ---
)TPL"},
  {"step_back",
   R"TPL([task: step_back]
Write one broader, more general question whose answer would help answer the question below. Reply with that question only.
--- question ---
{question}
--- end ---
)TPL"},
  {"hyde",
   R"TPL([task: hyde]
Write a short passage that plausibly answers the question, as it might appear in a reference text.
--- question ---
{question}
--- end ---
)TPL"},
  {"query_rewriting",
   R"TPL([task: query_rewriting]
Rewrite the question as an explicit, retrieval-friendly search query. Reply with the query only.
--- question ---
{question}
--- end ---
)TPL"},
  {"llm_rerank",
   R"TPL([task: rerank]
Order the numbered passages from most to least relevant to the question. Reply with the passage numbers, comma-separated, most relevant first.
--- question ---
{question}
--- passages ---
{passages}
--- end ---
Order:
)TPL"},
  {"tree_summarize",
   R"TPL([task: summarize]
Condense the passages into one short synthesis that preserves everything needed to answer the question.
--- question ---
{question}
--- passages ---
{passages}
--- end ---
Synthesis:
)TPL"},
  {"refine_draft",
   R"TPL([task: draft]
Draft a short answer to the question from the passage.
--- question ---
{question}
--- passage ---
{passage}
--- end ---
Draft:
)TPL"},
  {"refine_step",
   R"TPL([task: refine]
Improve the draft answer using the new passage; change it only where the passage adds or corrects something. Reply with the improved answer only.
--- question ---
{question}
--- draft ---
{draft}
--- passage ---
{passage}
--- end ---
)TPL"},
  {"reflect_critique",
   R"TPL([task: critique]
List factual gaps or unsupported claims in the answer, judged strictly against the context.
--- question ---
{question}
--- context ---
{context}
--- answer ---
{answer}
--- end ---
Critique:
)TPL"},
  {"reflect_revise",
   R"TPL([task: revise]
Revise the answer so it addresses the critique while staying grounded in the context. Reply with the revised answer only.
--- question ---
{question}
--- context ---
{context}
--- answer ---
{answer}
--- critique ---
{critique}
--- end ---
)TPL"},
  {"hype_questions",
   R"TPL([task: hype_questions]
Write 3 questions that the passage below answers. One per line, no numbering.
--- passage ---
{passage}
--- end ---
)TPL"},
  };
  return table;
}

}  // namespace

TemplateSet TemplateSet::builtin() {
  TemplateSet set;
  set.templates_ = builtin_templates();
  return set;
}

TemplateSet TemplateSet::load_dir(const std::filesystem::path& dir) {
  TemplateSet set = builtin();
  if (!std::filesystem::is_directory(dir)) {
    throw ConfigError("template directory " + dir.string() + " does not exist");
  }
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path());
    std::ostringstream buf;
    buf << in.rdbuf();
    set.templates_[entry.path().stem().string()] = buf.str();
  }
  return set;
}

const std::string& TemplateSet::get(const std::string& name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw ConfigError("unknown template '" + name + "'");
  return it->second;
}

std::string TemplateSet::render(const std::string& name,
                                const std::map<std::string, std::string>& vars) const {
  return render_template(get(name), vars);
}

std::vector<std::string> TemplateSet::names() const {
  std::vector<std::string> out;
  for (const auto& [name, text] : templates_) out.push_back(name);
  return out;
}

std::string render_template(const std::string& text, const std::map<std::string, std::string>& vars) {
  std::string out = text;
  for (const auto& [key, value] : vars) {
    const std::string needle = "{" + key + "}";
    size_t pos = 0;
    while ((pos = out.find(needle, pos)) != std::string::npos) {
      out.replace(pos, needle.size(), value);
      pos += value.size();
    }
  }
  return out;
}

}  // namespace ragopt
