#include "bench/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "util/binio.hpp"
#include "util/error.hpp"
#include "util/rng.hpp"

namespace memsteer::bench {

std::string_view verb_name(Verb v) { return v == Verb::increase ? "increase" : "decrease"; }

Verb verb_from_name(std::string_view name) {
    if (name == "increase") return Verb::increase;
    if (name == "decrease") return Verb::decrease;
    fail(ErrorKind::schema, "unknown verb '" + std::string(name) + "'");
}

double quantize_magnitude(double raw) {
    double steps = std::floor(raw * 10.0 + 0.5);
    steps = std::min(3.0, std::max(1.0, steps));
    return action_magnitudes[static_cast<size_t>(steps) - 1];
}

namespace {

const std::array<std::string_view, 3> magnitude_adverbs = {"slightly", "moderately", "strongly"};

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> out;
    std::istringstream in{std::string(text)};
    std::string w;
    while (in >> w) out.push_back(w);
    return out;
}

// Flavored phrases for the canonical attributes; generic fallbacks otherwise.
std::vector<std::string> phrase_for(Verb v, const std::string& attr) {
    static const std::map<std::string, std::pair<std::string, std::string>> flavored = {
        {"subject_prominence", {"bring the subject forward", "pull the subject back"}},
        {"gaze_at_camera", {"look at the camera", "look away from the camera"}},
        {"smiling", {"smile more", "smile less"}},
        {"symmetry", {"center the composition", "offset the composition"}},
        {"clutter", {"add background props", "clear the background"}},
        {"brightness", {"brighten the scene", "darken the scene"}},
    };
    auto it = flavored.find(attr);
    if (it != flavored.end())
        return split_words(v == Verb::increase ? it->second.first : it->second.second);
    std::vector<std::string> words = {v == Verb::increase ? "raise" : "lower", "the", attr};
    return words;
}

}  // namespace

std::string Lexicon::key(const FeedbackAction& a) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.1f", a.magnitude);
    return std::string(verb_name(a.verb)) + "|" + a.attribute + "|" + buf;
}

void Lexicon::insert(const FeedbackAction& a, std::vector<std::string> words) {
    if (!entries_.emplace(key(a), words).second)
        fail(ErrorKind::schema, "duplicate lexicon entry for " + key(a));
    ordered_.emplace_back(a, std::move(words));
}

Lexicon Lexicon::default_for(const std::vector<std::string>& attributes) {
    Lexicon lex;
    for (Verb v : {Verb::increase, Verb::decrease}) {
        for (const auto& attr : attributes) {
            auto phrase = phrase_for(v, attr);
            for (size_t mi = 0; mi < action_magnitudes.size(); ++mi) {
                auto words = phrase;
                words.emplace_back(magnitude_adverbs[mi]);
                lex.insert({v, attr, action_magnitudes[mi]}, std::move(words));
            }
        }
    }
    lex.validate();
    return lex;
}

void Lexicon::validate() const {
    // Prefix-freeness over full sequences gives unique greedy parses.
    for (const auto& [ka, wa] : entries_) {
        for (const auto& [kb, wb] : entries_) {
            if (ka == kb) continue;
            if (wa.size() <= wb.size() && std::equal(wa.begin(), wa.end(), wb.begin()))
                fail(ErrorKind::schema,
                     "lexicon phrase for " + ka + " is a prefix of the one for " + kb);
        }
    }
}

const std::vector<std::string>& Lexicon::words_for(const FeedbackAction& a) const {
    auto it = entries_.find(key(a));
    if (it == entries_.end()) fail(ErrorKind::schema, "no lexicon entry for " + key(a));
    return it->second;
}

std::vector<std::string> Lexicon::all_words() const {
    std::vector<std::string> out;
    for (const auto& [action, words] : ordered_) {
        for (const auto& w : words)
            if (std::find(out.begin(), out.end(), w) == out.end()) out.push_back(w);
    }
    return out;
}

std::string Lexicon::render_text(std::span<const FeedbackAction> actions) const {
    std::string out;
    for (const auto& a : actions) {
        for (const auto& w : words_for(a)) {
            if (!out.empty()) out += ' ';
            out += w;
        }
    }
    return out;
}

std::vector<FeedbackAction> Lexicon::parse_words(std::span<const std::string> words) const {
    std::vector<FeedbackAction> out;
    size_t i = 0;
    while (i < words.size()) {
        bool matched = false;
        for (const auto& [action, phrase] : ordered_) {
            if (i + phrase.size() > words.size()) continue;
            if (std::equal(phrase.begin(), phrase.end(), words.begin() + static_cast<ptrdiff_t>(i))) {
                out.push_back(action);
                i += phrase.size();
                matched = true;
                break;
            }
        }
        if (!matched)
            fail(ErrorKind::schema, "unparseable feedback at word " + std::to_string(i) + " ('" +
                                        words[i] + "')");
    }
    return out;
}

void Lexicon::save(const std::filesystem::path& path) const {
    std::string out;
    for (const auto& [action, words] : ordered_) {
        char mag[16];
        std::snprintf(mag, sizeof(mag), "%.1f", action.magnitude);
        out += std::string(verb_name(action.verb)) + " " + action.attribute + " " + mag + "\t";
        for (size_t i = 0; i < words.size(); ++i) {
            if (i) out += ' ';
            out += words[i];
        }
        out += '\n';
    }
    write_text_file(path, out);
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
    std::istringstream in(memsteer::read_text_file(path));
    Lexicon lex;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            fail(ErrorKind::schema,
                 "lexicon line " + std::to_string(line_no) + ": missing tab separator");
        auto triple = split_words(line.substr(0, tab));
        if (triple.size() != 3)
            fail(ErrorKind::schema,
                 "lexicon line " + std::to_string(line_no) + ": expected 'verb attribute magnitude'");
        FeedbackAction a;
        a.verb = verb_from_name(triple[0]);
        a.attribute = triple[1];
        a.magnitude = quantize_magnitude(std::stod(triple[2]));
        auto words = split_words(line.substr(tab + 1));
        if (words.empty())
            fail(ErrorKind::schema, "lexicon line " + std::to_string(line_no) + ": empty phrase");
        lex.insert(a, std::move(words));
    }
    lex.validate();
    return lex;
}

FeedbackGrammar::FeedbackGrammar(const Lexicon& lexicon, const lm::Vocab& vocab, int max_actions)
    : max_actions_(max_actions), vocab_size_(vocab.size()) {
    if (max_actions_ < 1) fail(ErrorKind::contract, "max_actions must be >= 1");
    for (const auto& [action, words] : lexicon.ordered()) {
        Entry e;
        e.action = action;
        for (const auto& w : words) e.tokens.push_back(vocab.id(w));
        entries_.push_back(std::move(e));
    }
    if (entries_.empty()) fail(ErrorKind::contract, "empty lexicon");
}

size_t FeedbackGrammar::max_phrase_len() const {
    size_t n = 0;
    for (const auto& e : entries_) n = std::max(n, e.tokens.size());
    return n;
}

namespace {

// Walk a token prefix through the action grammar. Returns the number of
// complete actions, the set of entries consistent with the partial phrase,
// and the offset within it. A prefix no entry matches yields match_len == -1.
struct GrammarState {
    int actions_done = 0;
    size_t offset = 0;                  // tokens consumed inside the current phrase
    std::vector<size_t> candidates;     // entry indices matching the partial phrase
    bool valid = true;
};

}  // namespace

void FeedbackGrammar::allowed(std::span<const int> generated, std::vector<uint8_t>& mask) const {
    mask.assign(static_cast<size_t>(vocab_size_), 0);

    GrammarState st;
    st.candidates.resize(entries_.size());
    for (size_t i = 0; i < entries_.size(); ++i) st.candidates[i] = i;

    for (int tok : generated) {
        std::vector<size_t> next;
        bool completed = false;
        for (size_t idx : st.candidates) {
            const auto& seq = entries_[idx].tokens;
            if (st.offset < seq.size() && seq[st.offset] == tok) {
                if (st.offset + 1 == seq.size()) {
                    completed = true;  // prefix-free: at most one entry can end here
                } else {
                    next.push_back(idx);
                }
            }
        }
        if (completed) {
            st.actions_done += 1;
            st.offset = 0;
            st.candidates.resize(entries_.size());
            for (size_t i = 0; i < entries_.size(); ++i) st.candidates[i] = i;
        } else if (!next.empty()) {
            st.candidates = std::move(next);
            st.offset += 1;
        } else {
            st.valid = false;
            break;
        }
    }
    if (!st.valid) return;  // dead prefix: nothing admissible

    bool at_boundary = st.offset == 0;
    if (at_boundary && st.actions_done >= 1) mask[lm::tok_eos] = 1;
    if (st.actions_done < max_actions_ || !at_boundary) {
        for (size_t idx : st.candidates) {
            const auto& seq = entries_[idx].tokens;
            if (st.offset < seq.size()) mask[static_cast<size_t>(seq[st.offset])] = 1;
        }
    }
}

lm::StepMask FeedbackGrammar::mask() const {
    return [this](std::span<const int> generated, std::vector<uint8_t>& allowed_mask) {
        this->allowed(generated, allowed_mask);
    };
}

std::vector<FeedbackAction> FeedbackGrammar::parse(std::span<const int> tokens) const {
    std::vector<FeedbackAction> out;
    size_t i = 0;
    while (i < tokens.size()) {
        bool matched = false;
        for (const auto& e : entries_) {
            if (i + e.tokens.size() > tokens.size()) continue;
            if (std::equal(e.tokens.begin(), e.tokens.end(),
                           tokens.begin() + static_cast<ptrdiff_t>(i))) {
                out.push_back(e.action);
                i += e.tokens.size();
                matched = true;
                break;
            }
        }
        if (!matched)
            fail(ErrorKind::schema,
                 "feedback does not parse at token offset " + std::to_string(i));
    }
    if (out.size() > static_cast<size_t>(max_actions_))
        fail(ErrorKind::schema, "feedback exceeds " + std::to_string(max_actions_) + " actions");
    return out;
}

std::vector<int> FeedbackGrammar::render_tokens(std::span<const FeedbackAction> actions) const {
    std::vector<int> out;
    for (const auto& a : actions) {
        bool found = false;
        for (const auto& e : entries_) {
            if (e.action == a) {
                out.insert(out.end(), e.tokens.begin(), e.tokens.end());
                found = true;
                break;
            }
        }
        if (!found)
            fail(ErrorKind::schema, "no lexicon entry for action on '" + a.attribute + "'");
    }
    return out;
}

TeacherOracle::TeacherOracle(const Scorer& scorer, const std::vector<std::string>& attributes,
                             double min_delta, int max_actions)
    : scorer_(&scorer), attributes_(&attributes), min_delta_(min_delta),
      max_actions_(max_actions) {
    if (scorer.weights.size() != attributes.size())
        fail(ErrorKind::contract, "scorer/attribute arity mismatch");
}

std::vector<FeedbackAction> TeacherOracle::elicit(const ImageRecord& source,
                                                  const ImageRecord& dest,
                                                  std::span<const int> prompt) const {
    (void)prompt;  // the rule-based oracle reads features, not text
    if (source.scene_id != dest.scene_id)
        fail(ErrorKind::contract, "teacher pair spans two scenes");
    const size_t K = attributes_->size();
    if (source.features.size() != K || dest.features.size() != K)
        fail(ErrorKind::contract, "feature arity mismatch in teacher pair");

    struct Cand {
        size_t k;
        double delta;
    };
    std::vector<Cand> cands;
    for (size_t k = 0; k < K; ++k) {
        double delta = dest.features[k] - source.features[k];
        if (std::abs(delta) <= min_delta_) continue;
        // Keep only moves that the ground-truth scorer rewards, so the
        // oracle's own feedback can never hurt on the noiseless editor.
        if (scorer_->weights[k] * delta <= 0.0) continue;
        cands.push_back({k, delta});
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        double aa = std::abs(a.delta), ab = std::abs(b.delta);
        if (aa != ab) return aa > ab;
        return a.k < b.k;
    });
    if (cands.size() > static_cast<size_t>(max_actions_))
        cands.resize(static_cast<size_t>(max_actions_));

    std::vector<FeedbackAction> out;
    for (const auto& c : cands) {
        FeedbackAction a;
        a.verb = c.delta > 0.0 ? Verb::increase : Verb::decrease;
        a.attribute = (*attributes_)[c.k];
        a.magnitude = quantize_magnitude(std::abs(c.delta));
        out.push_back(std::move(a));
    }
    return out;
}

ImageRecord EditOracle::apply(const Scorer& scorer, const std::vector<std::string>& attributes,
                              const ImageRecord& image,
                              std::span<const FeedbackAction> feedback) const {
    ImageRecord out = image;
    for (const auto& a : feedback) {
        auto it = std::find(attributes.begin(), attributes.end(), a.attribute);
        if (it == attributes.end())
            fail(ErrorKind::schema, "unknown attribute '" + a.attribute + "' in feedback");
        size_t k = static_cast<size_t>(it - attributes.begin());
        double shift = a.verb == Verb::increase ? a.magnitude : -a.magnitude;
        out.features[k] = std::min(1.0, std::max(0.0, out.features[k] + shift));
    }
    if (noise > 0.0) {
        Rng rng(derive_seed(seed, image.id));
        for (auto& f : out.features) f = std::min(1.0, std::max(0.0, f + noise * rng.normal()));
    }
    out.memorability = scorer.score(out.features);
    return out;
}

}  // namespace memsteer::bench
