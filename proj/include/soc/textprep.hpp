#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "soc/common.hpp"
#include "soc/tensor.hpp"

// Text cleaning, vocabulary construction and fixed-length index encoding.

namespace soc {

struct TokenizerConfig {
    bool lowercase = true;
    bool strip_usernames = true;
    bool strip_hashtags = true;
    bool strip_urls = true;
    bool split_punctuation = true;
};

namespace detail {

inline bool ascii_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline bool ascii_punct(unsigned char c) {
    return c < 0x80 && std::ispunct(c);
}

inline bool url_like(std::string_view token) {
    auto has_prefix = [&](std::string_view prefix) {
        if (token.size() < prefix.size()) return false;
        for (std::size_t i = 0; i < prefix.size(); ++i) {
            if (std::tolower(static_cast<unsigned char>(token[i])) != prefix[i]) return false;
        }
        return true;
    };
    return has_prefix("http://") || has_prefix("https://") || has_prefix("www.");
}

// Replaces every byte that is not part of a well-formed UTF-8 sequence with
// U+FFFD. Well-formed multi-byte sequences pass through untouched.
inline std::string sanitize_utf8(std::string_view text) {
    static constexpr std::string_view replacement = "\xEF\xBF\xBD";
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        const auto b = static_cast<unsigned char>(text[i]);
        std::size_t len = 0;
        if (b < 0x80) len = 1;
        else if ((b & 0xE0) == 0xC0 && b >= 0xC2) len = 2;
        else if ((b & 0xF0) == 0xE0) len = 3;
        else if ((b & 0xF8) == 0xF0 && b <= 0xF4) len = 4;
        if (len == 0 || i + len > text.size()) {
            out += replacement;
            ++i;
            continue;
        }
        bool ok = true;
        for (std::size_t k = 1; k < len; ++k) {
            if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) ok = false;
        }
        if (!ok) {
            out += replacement;
            ++i;
            continue;
        }
        out.append(text.substr(i, len));
        i += len;
    }
    return out;
}

inline bool stripped(std::string_view token, const TokenizerConfig& cfg) {
    if (token.empty()) return true;
    if (cfg.strip_usernames && token.front() == '@') return true;
    if (cfg.strip_hashtags && token.front() == '#') return true;
    if (cfg.strip_urls && url_like(token)) return true;
    return false;
}

}  // namespace detail

// Cleaning order: whitespace split, lowercase, whole-token removal of
// usernames / hashtags / URLs, then punctuation-run splitting. Tokens the
// split step uncovers (a bare "@" from "a@b") go through removal again, so
// the output never contains a token starting with '@' or '#'. Total on any
// byte string; invalid UTF-8 is replaced before processing.
inline std::vector<std::string> tokenize(std::string_view text,
                                         const TokenizerConfig& cfg = {}) {
    const std::string clean = detail::sanitize_utf8(text);
    std::vector<std::string> words;
    std::size_t i = 0;
    while (i < clean.size()) {
        while (i < clean.size() && detail::ascii_space(static_cast<unsigned char>(clean[i]))) ++i;
        std::size_t start = i;
        while (i < clean.size() && !detail::ascii_space(static_cast<unsigned char>(clean[i]))) ++i;
        if (i > start) words.emplace_back(clean.substr(start, i - start));
    }

    std::vector<std::string> out;
    out.reserve(words.size());
    for (std::string& word : words) {
        if (cfg.lowercase) {
            for (char& c : word) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
        if (detail::stripped(word, cfg)) continue;
        if (!cfg.split_punctuation) {
            out.push_back(std::move(word));
            continue;
        }
        std::size_t k = 0;
        while (k < word.size()) {
            if (detail::ascii_punct(static_cast<unsigned char>(word[k]))) {
                std::string piece(1, word[k]);
                if (!detail::stripped(piece, cfg)) out.push_back(std::move(piece));
                ++k;
            } else {
                std::size_t start = k;
                while (k < word.size() && !detail::ascii_punct(static_cast<unsigned char>(word[k]))) ++k;
                std::string piece = word.substr(start, k - start);
                if (!detail::stripped(piece, cfg)) out.push_back(std::move(piece));
            }
        }
    }
    return out;
}

// Token -> dense index map. Index 0 is padding, index 1 is the unknown
// token; both names use angle brackets, which punctuation splitting makes
// unreachable from corpus text.
class Vocabulary {
public:
    static constexpr std::int32_t kPadIndex = 0;
    static constexpr std::int32_t kUnkIndex = 1;
    static constexpr const char* kPadToken = "<pad>";
    static constexpr const char* kUnkToken = "<unk>";

    Vocabulary() {
        tokens_ = {kPadToken, kUnkToken};
        index_[kPadToken] = kPadIndex;
        index_[kUnkToken] = kUnkIndex;
    }

    // Index assignment is deterministic: descending frequency, ties broken
    // lexicographically.
    template <typename Range>
    static Vocabulary build(const Range& corpus, int min_count = 1) {
        if (min_count < 1) throw input_error("build_vocab: min_count must be >= 1");
        std::unordered_map<std::string, std::size_t> freq;
        for (const auto& tokens : corpus) {
            for (const auto& token : tokens) ++freq[token];
        }
        std::vector<std::pair<std::string, std::size_t>> kept;
        kept.reserve(freq.size());
        for (auto& [token, count] : freq) {
            if (count >= static_cast<std::size_t>(min_count)) kept.emplace_back(token, count);
        }
        std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        Vocabulary vocab;
        for (auto& [token, count] : kept) vocab.add(token);
        return vocab;
    }

    std::int32_t lookup(std::string_view token) const {
        auto it = index_.find(std::string(token));
        return it == index_.end() ? kUnkIndex : it->second;
    }

    bool contains(std::string_view token) const {
        return index_.count(std::string(token)) > 0;
    }

    std::size_t size() const { return tokens_.size(); }
    const std::string& token(std::size_t index) const { return tokens_.at(index); }

    // Persisted as UTF-8 lines "token<TAB>index" in index order.
    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw io_error("cannot write vocabulary file: " + path);
        out << serialize();
    }

    static Vocabulary load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw io_error("cannot read vocabulary file: " + path);
        Vocabulary vocab;
        vocab.tokens_.clear();
        vocab.index_.clear();
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            const auto tab = line.find('\t');
            if (tab == std::string::npos) {
                throw format_error("vocabulary line " + std::to_string(lineno) + ": missing tab");
            }
            const std::string token = line.substr(0, tab);
            std::int32_t index = 0;
            const char* first = line.data() + tab + 1;
            const char* last = line.data() + line.size();
            auto [ptr, ec] = std::from_chars(first, last, index);
            if (ec != std::errc{} || ptr != last ||
                index != static_cast<std::int32_t>(vocab.tokens_.size())) {
                throw format_error("vocabulary line " + std::to_string(lineno) + ": bad index");
            }
            vocab.index_[token] = index;
            vocab.tokens_.push_back(token);
        }
        if (vocab.tokens_.size() < 2 || vocab.tokens_[0] != kPadToken ||
            vocab.tokens_[1] != kUnkToken) {
            throw format_error("vocabulary file missing reserved pad/unk entries: " + path);
        }
        return vocab;
    }

    std::uint64_t fingerprint() const {
        const std::string bytes = serialize();
        return fnv1a(bytes.data(), bytes.size());
    }

private:
    void add(const std::string& token) {
        index_[token] = static_cast<std::int32_t>(tokens_.size());
        tokens_.push_back(token);
    }

    std::string serialize() const {
        std::string out;
        for (std::size_t i = 0; i < tokens_.size(); ++i) {
            out += tokens_[i];
            out += '\t';
            out += std::to_string(i);
            out += '\n';
        }
        return out;
    }

    std::unordered_map<std::string, std::int32_t> index_;
    std::vector<std::string> tokens_;
};

// One embedding row per vocabulary index; the pad row is all zeros.
template <typename Real>
struct EmbeddingTable {
    std::size_t dim = 0;
    Tensor<Real> vectors;  // V x dim
};

// Rows for vocabulary words absent from any pre-trained source are drawn
// uniformly from [-0.05, 0.05] with the run's seed.
template <typename Real>
EmbeddingTable<Real> init_embeddings(const Vocabulary& vocab, std::size_t dim, Rng& rng) {
    EmbeddingTable<Real> table;
    table.dim = dim;
    table.vectors = Tensor<Real>({vocab.size(), dim});
    for (std::size_t i = Vocabulary::kUnkIndex; i < vocab.size(); ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            table.vectors(i, j) = Real(rng.uniform(-0.05, 0.05));
        }
    }
    return table;
}

// Reads whitespace-separated "word v1 ... v_dim" lines and fills rows for
// vocabulary words found in the file; everything else follows
// init_embeddings. A line with the wrong vector arity rejects the file.
template <typename Real>
EmbeddingTable<Real> load_glove(const std::string& path, std::size_t dim,
                                const Vocabulary& vocab, Rng& rng) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot read embedding file: " + path);
    EmbeddingTable<Real> table = init_embeddings<Real>(vocab, dim, rng);
    std::string line;
    std::size_t lineno = 0;
    std::vector<double> values(dim);
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string word;
        fields >> word;
        std::size_t got = 0;
        double v = 0.0;
        while (fields >> v) {
            if (got < dim) values[got] = v;
            ++got;
        }
        if (got != dim) {
            throw format_error("embedding file " + path + " line " + std::to_string(lineno) +
                               ": expected " + std::to_string(dim) + " values, got " +
                               std::to_string(got));
        }
        const std::int32_t index = vocab.contains(word) ? vocab.lookup(word) : -1;
        if (index < 0) continue;
        for (std::size_t j = 0; j < dim; ++j) {
            table.vectors(static_cast<std::size_t>(index), j) = Real(values[j]);
        }
    }
    for (std::size_t j = 0; j < dim; ++j) table.vectors(Vocabulary::kPadIndex, j) = Real(0);
    return table;
}

// Writes the table in the same text format load_glove reads, one line per
// vocabulary token, with enough digits to round-trip exactly.
template <typename Real>
void save_embeddings(const EmbeddingTable<Real>& table, const Vocabulary& vocab,
                     const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write embedding file: " + path);
    out.precision(std::numeric_limits<Real>::max_digits10);
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        out << vocab.token(i);
        for (std::size_t j = 0; j < table.dim; ++j) out << ' ' << table.vectors(i, j);
        out << '\n';
    }
}

// Fixed-length index vector for one cleaned text.
struct EncodedSequence {
    std::vector<std::int32_t> indices;
    std::int32_t true_length = 0;
};

inline constexpr std::size_t kDefaultMaxLen = 64;

// Unknown tokens map to unk; longer sequences keep their first max_len
// tokens; shorter ones are post-padded with the pad index.
inline EncodedSequence encode(const std::vector<std::string>& tokens,
                              const Vocabulary& vocab,
                              std::size_t max_len = kDefaultMaxLen) {
    EncodedSequence seq;
    seq.indices.assign(max_len, Vocabulary::kPadIndex);
    seq.true_length = static_cast<std::int32_t>(std::min(tokens.size(), max_len));
    for (std::int32_t i = 0; i < seq.true_length; ++i) {
        seq.indices[static_cast<std::size_t>(i)] = vocab.lookup(tokens[static_cast<std::size_t>(i)]);
    }
    return seq;
}

}  // namespace soc
