#include "lm/vocab.hpp"

#include <sstream>

#include "util/binio.hpp"
#include "util/error.hpp"
#include "util/rng.hpp"

namespace memsteer::lm {

const std::array<std::string_view, num_special_tokens> special_token_names = {
    "<bos>", "<eos>", "<user>", "<assistant>", "<img>",
};

Vocab Vocab::from_words(const std::vector<std::string>& words) {
    Vocab v;
    for (auto s : special_token_names) v.words_.emplace_back(s);
    for (const auto& w : words) {
        if (w.empty()) fail(ErrorKind::schema, "empty vocabulary entry");
        if (w.find_first_of(" \t\r\n") != std::string::npos)
            fail(ErrorKind::schema, "vocabulary entry contains whitespace: '" + w + "'");
        v.words_.push_back(w);
    }
    for (size_t i = 0; i < v.words_.size(); ++i) {
        if (!v.index_.emplace(v.words_[i], static_cast<int>(i)).second)
            fail(ErrorKind::schema, "duplicate vocabulary entry: '" + v.words_[i] + "'");
    }
    return v;
}

Vocab Vocab::load(const std::filesystem::path& path) {
    std::string text = read_text_file(path);
    std::istringstream in(text);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    if (lines.size() < static_cast<size_t>(num_special_tokens))
        fail(ErrorKind::schema, "vocabulary file too small: " + path.string());
    for (int i = 0; i < num_special_tokens; ++i) {
        if (lines[static_cast<size_t>(i)] != special_token_names[static_cast<size_t>(i)])
            fail(ErrorKind::schema, "vocabulary file does not start with the special tokens: " +
                                        path.string());
    }
    std::vector<std::string> rest(lines.begin() + num_special_tokens, lines.end());
    return from_words(rest);
}

void Vocab::save(const std::filesystem::path& path) const {
    std::string out;
    for (const auto& w : words_) {
        out += w;
        out += '\n';
    }
    write_text_file(path, out);
}

uint64_t Vocab::hash() const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& w : words_) {
        h = fnv1a64(w, h);
        h = fnv1a64("\n", h);
    }
    return h;
}

const std::string& Vocab::word(int id) const {
    if (id < 0 || id >= size()) fail(ErrorKind::contract, "token id out of range");
    return words_[static_cast<size_t>(id)];
}

std::optional<int> Vocab::find(std::string_view w) const {
    auto it = index_.find(std::string(w));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

int Vocab::id(std::string_view w) const {
    auto found = find(w);
    if (!found) fail(ErrorKind::unknown_token, "unknown token: '" + std::string(w) + "'");
    return *found;
}

std::vector<int> Vocab::encode(std::string_view text) const {
    std::vector<int> out;
    size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i == start) break;
        int tid = id(text.substr(start, i - start));
        if (tid < num_special_tokens)
            fail(ErrorKind::contract,
                 "special token '" + std::string(text.substr(start, i - start)) +
                     "' not allowed in body text");
        out.push_back(tid);
    }
    return out;
}

std::string Vocab::decode(std::span<const int> ids) const {
    std::string out;
    for (size_t i = 0; i < ids.size(); ++i) {
        if (i) out += ' ';
        out += word(ids[i]);
    }
    return out;
}

}  // namespace memsteer::lm
