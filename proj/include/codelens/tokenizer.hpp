#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "codelens/error.hpp"
#include "codelens/unicode_data.hpp"

namespace codelens {

// Byte-pair token stream. decode(ids) reproduces the input byte-for-byte;
// texts[i] holds the exact bytes of token i (may be invalid UTF-8 in
// isolation when a multi-byte character spans tokens).
struct TokenSeq {
    std::vector<int> ids;
    std::vector<std::string> texts;

    std::size_t size() const { return ids.size(); }
    bool empty() const { return ids.empty(); }
};

namespace uni {

namespace detail {
template <std::size_t N>
inline bool in_ranges(const CpRange (&table)[N], char32_t cp) {
    const CpRange* lo = table;
    const CpRange* hi = table + N;
    while (lo < hi) {
        const CpRange* mid = lo + (hi - lo) / 2;
        if (cp < mid->lo)
            hi = mid;
        else if (cp > mid->hi)
            lo = mid + 1;
        else
            return true;
    }
    return false;
}
} // namespace detail

inline bool is_letter(char32_t cp) { return detail::in_ranges(kLetterRanges, cp); }
inline bool is_number(char32_t cp) { return detail::in_ranges(kNumberRanges, cp); }
inline bool is_whitespace(char32_t cp) { return detail::in_ranges(kWhitespaceRanges, cp); }

} // namespace uni

namespace detail {

// Strict UTF-8 decode: rejects overlong forms, surrogates, > U+10FFFF and
// truncated sequences. offsets has one extra trailing entry == text.size().
inline void decode_utf8(std::string_view text, std::vector<char32_t>& cps,
                        std::vector<std::size_t>& offsets) {
    cps.clear();
    offsets.clear();
    const auto* p = reinterpret_cast<const unsigned char*>(text.data());
    std::size_t n = text.size();
    std::size_t i = 0;
    while (i < n) {
        offsets.push_back(i);
        unsigned char b = p[i];
        char32_t cp = 0;
        std::size_t len = 0;
        if (b < 0x80) {
            cp = b;
            len = 1;
        } else if ((b & 0xE0) == 0xC0) {
            cp = b & 0x1F;
            len = 2;
        } else if ((b & 0xF0) == 0xE0) {
            cp = b & 0x0F;
            len = 3;
        } else if ((b & 0xF8) == 0xF0) {
            cp = b & 0x07;
            len = 4;
        } else {
            throw EncodingError("invalid UTF-8 byte at offset " + std::to_string(i));
        }
        if (i + len > n)
            throw EncodingError("truncated UTF-8 sequence at offset " + std::to_string(i));
        for (std::size_t k = 1; k < len; ++k) {
            unsigned char c = p[i + k];
            if ((c & 0xC0) != 0x80)
                throw EncodingError("invalid UTF-8 continuation at offset " + std::to_string(i + k));
            cp = (cp << 6) | (c & 0x3F);
        }
        static constexpr char32_t kMin[5] = {0, 0, 0x80, 0x800, 0x10000};
        if (len > 1 && cp < kMin[len])
            throw EncodingError("overlong UTF-8 sequence at offset " + std::to_string(i));
        if (cp >= 0xD800 && cp <= 0xDFFF)
            throw EncodingError("UTF-8 encoded surrogate at offset " + std::to_string(i));
        if (cp > 0x10FFFF)
            throw EncodingError("codepoint out of range at offset " + std::to_string(i));
        cps.push_back(cp);
        i += len;
    }
    offsets.push_back(n);
}

inline bool is_crlf(char32_t cp) { return cp == U'\r' || cp == U'\n'; }
// the "punctuation" residue class of the split pattern
inline bool is_other(char32_t cp) {
    return !uni::is_whitespace(cp) && !uni::is_letter(cp) && !uni::is_number(cp);
}
inline char32_t ascii_lower(char32_t cp) {
    return (cp >= U'A' && cp <= U'Z') ? cp + 32 : cp;
}

// One step of the cl100k_base pre-split. Returns the end (exclusive) of the
// chunk starting at codepoint index i. Alternatives are tried in the
// vocabulary's published order; first match wins.
inline std::size_t presplit_step(const std::vector<char32_t>& cps, std::size_t i) {
    const std::size_t n = cps.size();

    // '(?i:[sdmt]|ll|ve|re)
    if (cps[i] == U'\'' && i + 1 < n) {
        char32_t a = ascii_lower(cps[i + 1]);
        if (a == U's' || a == U'd' || a == U'm' || a == U't') return i + 2;
        if (i + 2 < n) {
            char32_t b = ascii_lower(cps[i + 2]);
            if ((a == U'l' && b == U'l') || (a == U'v' && b == U'e') || (a == U'r' && b == U'e'))
                return i + 3;
        }
    }

    // [^\r\n\p{L}\p{N}]?+\p{L}+  (prefix is possessive; retrying without it
    // could never succeed since the prefix char is not a letter)
    {
        std::size_t j = i;
        if (!is_crlf(cps[j]) && !uni::is_letter(cps[j]) && !uni::is_number(cps[j])) ++j;
        std::size_t k = j;
        while (k < n && uni::is_letter(cps[k])) ++k;
        if (k > j) return k;
    }

    // \p{N}{1,3}
    if (uni::is_number(cps[i])) {
        std::size_t k = i;
        while (k < n && uni::is_number(cps[k]) && k - i < 3) ++k;
        return k;
    }

    // ?[^\s\p{L}\p{N}]++[\r\n]*   (leading literal space)
    {
        std::size_t j = i;
        if (cps[j] == U' ' && j + 1 < n && is_other(cps[j + 1])) ++j;
        std::size_t k = j;
        while (k < n && is_other(cps[k])) ++k;
        if (k > j) {
            while (k < n && is_crlf(cps[k])) ++k;
            return k;
        }
    }

    // \s*[\r\n]
    if (uni::is_whitespace(cps[i])) {
        std::size_t r = i;
        std::size_t last_nl = std::string::npos;
        while (r < n && uni::is_whitespace(cps[r])) {
            if (is_crlf(cps[r])) last_nl = r;
            ++r;
        }
        if (last_nl != std::string::npos) return last_nl + 1;

        // \s+(?!\S)
        std::size_t len = r - i;
        if (r == n) return r;
        if (len >= 2) return r - 1;

        // \s+
        return r;
    }

    // unreachable: every codepoint falls in one class above
    return i + 1;
}

} // namespace detail

// cl100k_base-format vocabulary: base64 token bytes + rank per line.
class BpeVocab {
public:
    static BpeVocab from_string(const std::string& data) {
        BpeVocab v;
        std::istringstream in(data);
        v.parse(in);
        return v;
    }

    static BpeVocab from_file(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw Error("cannot open vocabulary file: " + path);
        BpeVocab v;
        v.parse(in);
        return v;
    }

    int rank_of(std::string_view piece) const {
        auto it = ranks_.find(std::string(piece));
        return it == ranks_.end() ? -1 : it->second;
    }

    const std::string& piece(int id) const {
        if (id < 0 || static_cast<std::size_t>(id) >= pieces_.size() || pieces_[id].empty())
            throw UnknownTokenError("unknown token id " + std::to_string(id));
        return pieces_[id];
    }

    std::size_t size() const { return ranks_.size(); }

private:
    void parse(std::istream& in) {
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            auto sp = line.find(' ');
            if (sp == std::string::npos)
                throw Error("malformed vocabulary line: " + line);
            std::string bytes = b64_decode(line.substr(0, sp));
            int rank = std::stoi(line.substr(sp + 1));
            if (rank < 0)
                throw Error("negative rank in vocabulary");
            if (static_cast<std::size_t>(rank) >= pieces_.size())
                pieces_.resize(rank + 1);
            pieces_[rank] = bytes;
            ranks_.emplace(std::move(bytes), rank);
        }
        if (ranks_.empty())
            throw Error("empty vocabulary");
    }

    static std::string b64_decode(std::string_view s) {
        auto val = [](char c) -> int {
            if (c >= 'A' && c <= 'Z') return c - 'A';
            if (c >= 'a' && c <= 'z') return c - 'a' + 26;
            if (c >= '0' && c <= '9') return c - '0' + 52;
            if (c == '+') return 62;
            if (c == '/') return 63;
            return -1;
        };
        std::string out;
        out.reserve(s.size() / 4 * 3);
        int buf = 0, bits = 0;
        for (char c : s) {
            if (c == '=') break;
            int v = val(c);
            if (v < 0)
                throw Error("invalid base64 in vocabulary");
            buf = (buf << 6) | v;
            bits += 6;
            if (bits >= 8) {
                bits -= 8;
                out.push_back(static_cast<char>((buf >> bits) & 0xFF));
            }
        }
        return out;
    }

    std::unordered_map<std::string, int> ranks_;
    std::vector<std::string> pieces_;
};

// Groups token indices into per-line runs: a run ends at (and includes) the
// first token whose text contains '\n'; a trailing run without a newline is
// kept as a final line.
inline std::vector<std::pair<std::size_t, std::size_t>>
line_runs(const std::vector<std::string>& texts) {
    std::vector<std::pair<std::size_t, std::size_t>> runs;
    std::size_t begin = 0;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (texts[i].find('\n') != std::string::npos) {
            runs.emplace_back(begin, i + 1);
            begin = i + 1;
        }
    }
    if (begin < texts.size()) runs.emplace_back(begin, texts.size());
    return runs;
}

class Tokenizer {
public:
    explicit Tokenizer(BpeVocab vocab) : vocab_(std::move(vocab)) {}

    const BpeVocab& vocab() const { return vocab_; }

    TokenSeq encode(std::string_view source) const {
        TokenSeq out;
        if (source.empty()) return out;
        std::vector<char32_t> cps;
        std::vector<std::size_t> offsets;
        detail::decode_utf8(source, cps, offsets);

        std::size_t i = 0;
        while (i < cps.size()) {
            std::size_t j = detail::presplit_step(cps, i);
            std::string_view chunk = source.substr(offsets[i], offsets[j] - offsets[i]);
            encode_chunk(chunk, out);
            i = j;
        }
        return out;
    }

    std::string decode(const TokenSeq& tokens) const { return decode(tokens.ids); }

    std::string decode(const std::vector<int>& ids) const {
        std::string out;
        for (int id : ids) out += vocab_.piece(id);
        return out;
    }

    std::vector<TokenSeq> split_lines(const TokenSeq& tokens) const {
        std::vector<TokenSeq> out;
        for (auto [b, e] : line_runs(tokens.texts)) {
            TokenSeq run;
            run.ids.assign(tokens.ids.begin() + b, tokens.ids.begin() + e);
            run.texts.assign(tokens.texts.begin() + b, tokens.texts.begin() + e);
            out.push_back(std::move(run));
        }
        return out;
    }

private:
    void encode_chunk(std::string_view chunk, TokenSeq& out) const {
        int direct = vocab_.rank_of(chunk);
        if (direct >= 0) {
            out.ids.push_back(direct);
            out.texts.emplace_back(chunk);
            return;
        }
        // byte pair merge: repeatedly fuse the adjacent pair with the lowest
        // rank (leftmost on ties) until no pair is in the vocabulary
        std::vector<std::size_t> bounds(chunk.size() + 1);
        for (std::size_t k = 0; k <= chunk.size(); ++k) bounds[k] = k;
        while (bounds.size() > 2) {
            int best = std::numeric_limits<int>::max();
            std::size_t best_i = 0;
            for (std::size_t k = 0; k + 2 < bounds.size(); ++k) {
                int r = vocab_.rank_of(chunk.substr(bounds[k], bounds[k + 2] - bounds[k]));
                if (r >= 0 && r < best) {
                    best = r;
                    best_i = k;
                }
            }
            if (best == std::numeric_limits<int>::max()) break;
            bounds.erase(bounds.begin() + static_cast<std::ptrdiff_t>(best_i) + 1);
        }
        for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
            std::string_view piece = chunk.substr(bounds[k], bounds[k + 1] - bounds[k]);
            int rank = vocab_.rank_of(piece);
            if (rank < 0)
                throw Error("byte not present in vocabulary (corrupt vocab file)");
            out.ids.push_back(rank);
            out.texts.emplace_back(piece);
        }
    }

    BpeVocab vocab_;
};

} // namespace codelens
