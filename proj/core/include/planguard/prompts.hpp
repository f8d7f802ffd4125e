#pragma once

// Prompt templates for every model-facing role. Templates are plain text
// with {name} placeholders; a config directory of .txt files overrides the
// compiled-in defaults file by file.

#include <array>
#include <map>
#include <string>
#include <string_view>

namespace planguard {

struct PromptLibrary {
    std::string planner_system;
    std::string planner_user;
    std::string revision_user;
    std::string relevance_system;
    std::string relevance_user;
    std::string compliance_system;
    std::string compliance_user;
    std::string emulator_system;
    std::string emulator_user;
    std::string judge_safety_user;
    std::string judge_helpfulness_user;
    std::string qa_system;
    std::array<std::string, 5> qa_styles;  // 1: definition, 2: scenario,
                                           // 3: true/false, 4: paraphrase,
                                           // 5: consequence
    std::string reask_note;

    static PromptLibrary builtin();

    // Reads <dir>/<template_name>.txt for each template; files that do not
    // exist fall back to the builtin text. QA styles load from
    // qa_style_1.txt .. qa_style_5.txt.
    static PromptLibrary load(const std::string& dir);
};

// Replaces every "{key}" occurrence; unknown placeholders are left intact.
std::string fill_template(std::string_view tmpl,
                          const std::map<std::string, std::string>& values);

}  // namespace planguard
