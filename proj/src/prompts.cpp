#include "anonrisk/prompts.hpp"

#include "anonrisk/util.hpp"

namespace anonrisk::prompts {

void write_prompt_files(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&dir](const char* name, std::string_view body) {
    util::write_text_file_atomic(dir / name, std::string(body) + "\n");
  };
  write("version.txt", kPromptVersion);
  write("intruder.system.txt", kIntruderSystem);
  write("intruder.user.txt", std::string(kIntruderUserPrefix) + "[TEXT]");
  write("second_guess.user.txt", kSecondGuessUser);
  write("rewrite.system.txt", kAssistantSystem);
  write("rewrite.user.txt", std::string(kRewriteUserPrefix) + "[TEXT]");
  write("tokens.system.txt", kAssistantSystem);
  write("tokens.user.txt", std::string(kTokensUserPrefix) + "[TEXT]");
  write("slotfill.system.txt", kSlotFillSystem);
  write("slotfill.user.txt", "[TEXT]");
}

}  // namespace anonrisk::prompts
