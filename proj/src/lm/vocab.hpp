#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace memsteer::lm {

// Special tokens occupy the first ids of every vocabulary file.
enum SpecialToken : int {
    tok_bos = 0,
    tok_eos = 1,
    tok_user = 2,
    tok_assistant = 3,
    tok_img = 4,
};
inline constexpr int num_special_tokens = 5;
extern const std::array<std::string_view, num_special_tokens> special_token_names;

// Word-level tokenizer over a fixed, closed vocabulary. One token per line,
// byte-exact; body text is whitespace-split.
class Vocab {
  public:
    // `words` follow the special tokens; duplicates rejected.
    static Vocab from_words(const std::vector<std::string>& words);
    static Vocab load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    int size() const { return static_cast<int>(words_.size()); }
    uint64_t hash() const;  // FNV-1a over the serialized file bytes

    const std::string& word(int id) const;
    std::optional<int> find(std::string_view word) const;
    int id(std::string_view word) const;  // throws unknown_token

    // Rejects special tokens in body text so chat rendering stays injective.
    std::vector<int> encode(std::string_view text) const;
    std::string decode(std::span<const int> ids) const;

  private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, int> index_;
};

}  // namespace memsteer::lm
