#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "bench/world.hpp"
#include "lm/vocab.hpp"

namespace memsteer::bench {

enum class Verb { increase, decrease };
std::string_view verb_name(Verb v);
Verb verb_from_name(std::string_view name);

inline constexpr std::array<double, 3> action_magnitudes{0.1, 0.2, 0.3};

// Nearest quantized magnitude; exact halves round up.
double quantize_magnitude(double raw);

struct FeedbackAction {
    Verb verb = Verb::increase;
    std::string attribute;
    double magnitude = 0.1;  // one of action_magnitudes

    bool operator==(const FeedbackAction&) const = default;
};

// One-to-one map between action triples and canonical word sequences. Phrase
// sequences are validated prefix-free so concatenated feedback parses
// unambiguously and every action round-trips through its surface form.
class Lexicon {
  public:
    static Lexicon default_for(const std::vector<std::string>& attributes);
    static Lexicon load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    const std::vector<std::string>& words_for(const FeedbackAction& a) const;
    std::vector<std::string> all_words() const;  // vocabulary contribution, first-appearance order
    std::string render_text(std::span<const FeedbackAction> actions) const;
    std::vector<FeedbackAction> parse_words(std::span<const std::string> words) const;

    // Entries in canonical enumeration order.
    const std::vector<std::pair<FeedbackAction, std::vector<std::string>>>& ordered() const {
        return ordered_;
    }

  private:
    static std::string key(const FeedbackAction& a);
    void insert(const FeedbackAction& a, std::vector<std::string> words);
    void validate() const;

    std::map<std::string, std::vector<std::string>> entries_;  // key -> phrase words
    std::vector<std::pair<FeedbackAction, std::vector<std::string>>> ordered_;
};

// Token-level grammar over a lexicon: feedback = 1..max_actions phrases, each
// an exact lexicon sequence; <eos> is admissible only at action boundaries.
class FeedbackGrammar {
  public:
    FeedbackGrammar(const Lexicon& lexicon, const lm::Vocab& vocab, int max_actions = 3);

    // StepMask-compatible: marks admissible next tokens given the emitted prefix.
    void allowed(std::span<const int> generated, std::vector<uint8_t>& mask) const;
    lm::StepMask mask() const;

    // Throws schema on any token stream the grammar does not accept.
    std::vector<FeedbackAction> parse(std::span<const int> tokens) const;
    std::vector<int> render_tokens(std::span<const FeedbackAction> actions) const;
    int max_actions() const { return max_actions_; }

    // Longest action phrase in tokens; useful for sizing generation budgets.
    size_t max_phrase_len() const;

  private:
    struct Entry {
        FeedbackAction action;
        std::vector<int> tokens;
    };
    std::vector<Entry> entries_;
    int max_actions_;
    int vocab_size_;
};

// Rule-based teacher: reads both images, recommends the largest feature moves
// toward the destination that also help the score, so applying its own
// feedback never lowers ground-truth memorability on the noiseless editor.
class TeacherOracle {
  public:
    TeacherOracle(const Scorer& scorer, const std::vector<std::string>& attributes,
                  double min_delta = 0.05, int max_actions = 3);

    // The prompt is accepted for interface parity and ignored by the rules.
    std::vector<FeedbackAction> elicit(const ImageRecord& source, const ImageRecord& dest,
                                       std::span<const int> prompt = {}) const;

  private:
    const Scorer* scorer_;
    const std::vector<std::string>* attributes_;
    double min_delta_;
    int max_actions_;
};

// Deterministic editor: applies each action as a clipped attribute shift and
// rescores. `noise` emulates editor drift; zero reproduces an identity edit
// for empty feedback.
struct EditOracle {
    double noise = 0.0;
    uint64_t seed = 0;

    ImageRecord apply(const Scorer& scorer, const std::vector<std::string>& attributes,
                      const ImageRecord& image, std::span<const FeedbackAction> feedback) const;
};

}  // namespace memsteer::bench
