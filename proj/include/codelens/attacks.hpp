#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "codelens/error.hpp"
#include "codelens/rng.hpp"

namespace codelens::attacks {

inline void require_python(const std::string& language) {
    if (language != "python" && language != "py")
        throw UnsupportedLanguageError("attacks support python only, got: " + language);
}

// ---------------------------------------------------------------------------
// lightweight python lexer: just enough structure for the transformations
// ---------------------------------------------------------------------------

enum class PyKind { ident, keyword, number, str, fstr, comment, op, newline, ws };

struct PyTok {
    PyKind kind;
    std::size_t begin;
    std::size_t end; // exclusive
};

inline const std::unordered_set<std::string>& python_keywords() {
    static const std::unordered_set<std::string> kw = {
        "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class",
        "continue", "def", "del", "elif", "else", "except", "finally", "for", "from", "global",
        "if", "import", "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return",
        "try", "while", "with", "yield", "match", "case"};
    return kw;
}

inline const std::unordered_set<std::string>& python_builtins() {
    static const std::unordered_set<std::string> b = {
        "abs", "aiter", "all", "any", "ascii", "bin", "bool", "bytearray", "bytes", "callable",
        "chr", "classmethod", "compile", "complex", "delattr", "dict", "dir", "divmod",
        "enumerate", "eval", "exec", "exit", "filter", "float", "format", "frozenset", "getattr",
        "globals", "hasattr", "hash", "help", "hex", "id", "input", "int", "isinstance",
        "issubclass", "iter", "len", "list", "locals", "map", "max", "memoryview", "min", "next",
        "object", "oct", "open", "ord", "pow", "print", "property", "quit", "range", "repr",
        "reversed", "round", "set", "setattr", "slice", "sorted", "staticmethod", "str", "sum",
        "super", "tuple", "type", "vars", "zip", "self", "cls",
        "ArithmeticError", "AssertionError", "AttributeError", "BaseException", "Exception",
        "FileNotFoundError", "GeneratorExit", "ImportError", "IndexError", "KeyError",
        "KeyboardInterrupt", "LookupError", "MemoryError", "NameError", "NotImplementedError",
        "OSError", "OverflowError", "RecursionError", "RuntimeError", "StopIteration",
        "SystemExit", "TypeError", "UnicodeDecodeError", "ValueError", "ZeroDivisionError",
        "__name__", "__file__", "__doc__", "NotImplemented", "Ellipsis"};
    return b;
}

namespace detail {

// end offset of a quoted literal whose opening quote sits at i; handles
// short and triple quotes and backslash escapes
inline std::size_t scan_quoted(const std::string& src, std::size_t i) {
    const std::size_t n = src.size();
    char q = src[i];
    bool triple = (i + 2 < n && src[i + 1] == q && src[i + 2] == q);
    i += triple ? 3 : 1;
    while (i < n) {
        if (src[i] == '\\' && i + 1 < n) {
            i += 2;
            continue;
        }
        if (triple) {
            if (src[i] == q && i + 2 < n && src[i + 1] == q && src[i + 2] == q) return i + 3;
            ++i;
        } else {
            if (src[i] == q) return i + 1;
            if (src[i] == '\n') return i; // unterminated; stop at eol
            ++i;
        }
    }
    return n;
}

} // namespace detail

inline std::vector<PyTok> lex_python(const std::string& src) {
    std::vector<PyTok> toks;
    std::size_t i = 0;
    const std::size_t n = src.size();

    auto is_id_start = [](unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; };
    auto is_id_cont = [](unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; };

    while (i < n) {
        unsigned char c = src[i];
        std::size_t start = i;
        if (c == '\n') {
            toks.push_back({PyKind::newline, start, ++i});
            continue;
        }
        if (c == ' ' || c == '\t' || c == '\r') {
            while (i < n && (src[i] == ' ' || src[i] == '\t' || src[i] == '\r')) ++i;
            toks.push_back({PyKind::ws, start, i});
            continue;
        }
        if (c == '#') {
            while (i < n && src[i] != '\n') ++i;
            toks.push_back({PyKind::comment, start, i});
            continue;
        }
        if (is_id_start(c)) {
            std::size_t j = i;
            while (j < n && is_id_cont(static_cast<unsigned char>(src[j]))) ++j;
            std::string word = src.substr(i, j - i);
            std::string lower = word;
            for (auto& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
            bool is_prefix = lower == "r" || lower == "b" || lower == "u" || lower == "f" ||
                             lower == "rb" || lower == "br" || lower == "fr" || lower == "rf";
            if (is_prefix && j < n && (src[j] == '"' || src[j] == '\'')) {
                // prefixed string literal, token spans prefix + quotes
                i = detail::scan_quoted(src, j);
                bool fstring = lower.find('f') != std::string::npos;
                toks.push_back({fstring ? PyKind::fstr : PyKind::str, start, i});
                continue;
            }
            i = j;
            toks.push_back({python_keywords().count(word) ? PyKind::keyword : PyKind::ident,
                            start, i});
            continue;
        }
        if (c == '"' || c == '\'') {
            i = detail::scan_quoted(src, i);
            toks.push_back({PyKind::str, start, i});
            continue;
        }
        if (std::isdigit(c) || (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
            ++i;
            while (i < n) {
                unsigned char d = src[i];
                if (std::isalnum(d) || d == '_' || d == '.') {
                    ++i;
                    continue;
                }
                // exponent sign
                if ((d == '+' || d == '-') && (src[i - 1] == 'e' || src[i - 1] == 'E')) {
                    ++i;
                    continue;
                }
                break;
            }
            toks.push_back({PyKind::number, start, i});
            continue;
        }
        // multi-char operators first
        {
            static const char* three[] = {"**=", "//=", ">>=", "<<=", "..."};
            static const char* two[] = {"==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%=",
                                        "&=", "|=", "^=", "//", "**", "<<", ">>", ":=", "->"};
            bool matched = false;
            for (const char* op : three)
                if (n - i >= 3 && src.compare(i, 3, op) == 0) {
                    i += 3;
                    matched = true;
                    break;
                }
            if (!matched)
                for (const char* op : two)
                    if (n - i >= 2 && src.compare(i, 2, op) == 0) {
                        i += 2;
                        matched = true;
                        break;
                    }
            if (!matched) ++i;
            toks.push_back({PyKind::op, start, i});
        }
    }
    return toks;
}

namespace detail {

inline std::string tok_text(const std::string& src, const PyTok& t) {
    return src.substr(t.begin, t.end - t.begin);
}

inline bool is_open(const std::string& s) { return s == "(" || s == "[" || s == "{"; }
inline bool is_close(const std::string& s) { return s == ")" || s == "]" || s == "}"; }

// index of previous / next token skipping whitespace, comments and (for prev)
// newlines inside brackets are not skipped: callers pass the filter they need
inline long prev_solid(const std::vector<PyTok>& toks, long i) {
    for (long j = i - 1; j >= 0; --j)
        if (toks[j].kind != PyKind::ws && toks[j].kind != PyKind::comment) return j;
    return -1;
}

inline long next_solid(const std::vector<PyTok>& toks, long i) {
    for (long j = i + 1; j < static_cast<long>(toks.size()); ++j)
        if (toks[j].kind != PyKind::ws && toks[j].kind != PyKind::comment) return j;
    return -1;
}

} // namespace detail

// ---------------------------------------------------------------------------
// identifier renaming
// ---------------------------------------------------------------------------

// Renames user-defined identifiers (assignment targets, def/class names,
// parameters, loop and as-targets) consistently with fresh seeded names.
// Keywords, builtins, dotted attribute names, import names, kwarg names and
// string contents are left alone. Lexically scope-unaware by design.
inline std::string rename_identifiers(const std::string& source, const std::string& language,
                                      std::uint64_t seed) {
    require_python(language);
    auto toks = lex_python(source);

    std::unordered_set<std::string> all_idents;
    for (const auto& t : toks)
        if (t.kind == PyKind::ident) all_idents.insert(detail::tok_text(source, t));

    std::vector<std::string> defined_order;
    std::unordered_set<std::string> defined;
    std::unordered_set<std::string> excluded;

    // names ever used as attributes (x.name) stay fixed everywhere: renaming
    // a method definition would break its dotted call sites
    for (long i = 0; i < static_cast<long>(toks.size()); ++i) {
        if (toks[i].kind != PyKind::ident) continue;
        long p = detail::prev_solid(toks, i);
        if (p >= 0 && detail::tok_text(source, toks[p]) == ".")
            excluded.insert(detail::tok_text(source, toks[i]));
    }

    auto mark_defined = [&](const std::string& name) {
        if (!defined.count(name)) {
            defined.insert(name);
            defined_order.push_back(name);
        }
    };

    long depth = 0;
    bool in_import_line = false;
    bool in_def_params = false;
    long def_paren_depth = 0;
    bool in_for_targets = false;
    bool in_lambda_params = false;
    bool in_global_decl = false;

    for (long i = 0; i < static_cast<long>(toks.size()); ++i) {
        const auto& t = toks[i];
        std::string text = detail::tok_text(source, t);
        if (t.kind == PyKind::op) {
            if (detail::is_open(text)) ++depth;
            if (detail::is_close(text)) {
                --depth;
                if (in_def_params && depth < def_paren_depth) in_def_params = false;
            }
            if (text == ":" && in_lambda_params && depth == 0) in_lambda_params = false;
            continue;
        }
        if (t.kind == PyKind::newline) {
            if (depth == 0) {
                in_import_line = false;
                in_for_targets = false;
                in_lambda_params = false;
                in_global_decl = false;
            }
            continue;
        }
        if (t.kind == PyKind::keyword) {
            if (text == "import" || text == "from") in_import_line = true;
            if (text == "def" || text == "class") {
                long j = detail::next_solid(toks, i);
                if (j >= 0 && toks[j].kind == PyKind::ident)
                    mark_defined(detail::tok_text(source, toks[j]));
                if (text == "def") {
                    long k = detail::next_solid(toks, j);
                    if (k >= 0 && detail::tok_text(source, toks[k]) == "(") {
                        in_def_params = true;
                        def_paren_depth = depth + 1;
                    }
                }
            }
            if (text == "for") in_for_targets = true;
            if (text == "in") in_for_targets = false;
            if (text == "lambda") in_lambda_params = true;
            if (text == "as") {
                long j = detail::next_solid(toks, i);
                if (j >= 0 && toks[j].kind == PyKind::ident)
                    mark_defined(detail::tok_text(source, toks[j]));
            }
            if (text == "global" || text == "nonlocal") in_global_decl = true;
            continue;
        }
        if (t.kind != PyKind::ident) continue;

        long p = detail::prev_solid(toks, i);
        bool after_dot = p >= 0 && detail::tok_text(source, toks[p]) == ".";
        long nx = detail::next_solid(toks, i);
        std::string next_text = nx >= 0 ? detail::tok_text(source, toks[nx]) : "";

        if (in_import_line) {
            // names bound by import stay; the token after `as` was already
            // marked defined above
            bool after_as = p >= 0 && detail::tok_text(source, toks[p]) == "as";
            if (!after_as) excluded.insert(text);
            continue;
        }
        if (after_dot) continue; // attribute use

        if (in_global_decl) {
            mark_defined(text);
            continue;
        }
        if (in_def_params && depth == def_paren_depth) {
            if (next_text == "," || next_text == "=" || next_text == ":" || next_text == ")")
                mark_defined(text);
            continue;
        }
        if (in_lambda_params && (next_text == "," || next_text == ":" || next_text == "=")) {
            mark_defined(text);
            continue;
        }
        if (in_for_targets) {
            mark_defined(text);
            continue;
        }
        // kwarg use: name '=' inside a call; exclude from renaming entirely
        if (depth > 0 && next_text == "=" && p >= 0) {
            std::string prev_text = detail::tok_text(source, toks[p]);
            if (prev_text == "(" || prev_text == ",") {
                excluded.insert(text);
                continue;
            }
        }
        // plain / augmented assignment target at statement level; walrus
        // binds at any depth
        static const std::unordered_set<std::string> assign_ops = {
            "=", "+=", "-=", "*=", "/=", "//=", "**=", "%=", "&=", "|=", "^=", ">>=", "<<=", ":="};
        if (assign_ops.count(next_text) && (depth == 0 || next_text == ":=")) {
            mark_defined(text);
            continue;
        }
        // tuple target: name ',' ... '=' on the same logical line
        if (depth == 0 && next_text == ",") {
            long j = nx;
            bool saw_eq = false;
            while (j >= 0 && j < static_cast<long>(toks.size())) {
                const auto& tj = toks[j];
                if (tj.kind == PyKind::newline) break;
                std::string tt = detail::tok_text(source, tj);
                if (tj.kind == PyKind::op && tt == "=") {
                    saw_eq = true;
                    break;
                }
                if (tj.kind == PyKind::op && !(tt == "," || tt == "(" || tt == ")" || tt == "*"))
                    break;
                if (tj.kind == PyKind::keyword) break;
                j = detail::next_solid(toks, j);
            }
            if (saw_eq) mark_defined(text);
        }
    }

    // build the rename map with seeded numbering
    std::vector<std::string> targets;
    for (const auto& name : defined_order) {
        if (excluded.count(name)) continue;
        if (python_builtins().count(name)) continue;
        if (name.size() >= 4 && name.substr(0, 2) == "__" &&
            name.substr(name.size() - 2) == "__")
            continue;
        targets.push_back(name);
    }
    std::vector<std::size_t> numbering(targets.size());
    for (std::size_t k = 0; k < numbering.size(); ++k) numbering[k] = k;
    Rng rng(seed ^ 0x7C0FFEE5EED5ULL);
    rng.shuffle(numbering);

    std::unordered_map<std::string, std::string> rename;
    std::size_t bump = 0;
    for (std::size_t k = 0; k < targets.size(); ++k) {
        std::string fresh;
        do {
            fresh = "v" + std::to_string(numbering[k] + bump * targets.size());
            if (all_idents.count(fresh) || python_builtins().count(fresh)) {
                ++bump;
                fresh.clear();
            }
        } while (fresh.empty());
        rename[targets[k]] = fresh;
    }

    // rewrite pass, including expressions inside f-string braces
    std::string out;
    out.reserve(source.size());
    for (long i = 0; i < static_cast<long>(toks.size()); ++i) {
        const auto& t = toks[i];
        std::string text = detail::tok_text(source, t);
        if (t.kind == PyKind::ident) {
            long p = detail::prev_solid(toks, i);
            bool after_dot = p >= 0 && detail::tok_text(source, toks[p]) == ".";
            auto it = rename.find(text);
            if (!after_dot && it != rename.end()) {
                out += it->second;
                continue;
            }
        }
        if (t.kind == PyKind::fstr) {
            // rename identifiers inside {...} interpolations
            std::string rebuilt;
            rebuilt.reserve(text.size());
            std::size_t k = 0;
            while (k < text.size()) {
                if (text[k] == '{' && k + 1 < text.size() && text[k + 1] == '{') {
                    rebuilt += "{{";
                    k += 2;
                    continue;
                }
                if (text[k] == '}' && k + 1 < text.size() && text[k + 1] == '}') {
                    rebuilt += "}}";
                    k += 2;
                    continue;
                }
                if (text[k] == '{') {
                    std::size_t close = k + 1;
                    int braces = 1;
                    while (close < text.size() && braces > 0) {
                        if (text[close] == '{') ++braces;
                        if (text[close] == '}') --braces;
                        ++close;
                    }
                    std::string inner = text.substr(k + 1, close - k - 2);
                    auto inner_toks = lex_python(inner);
                    std::string inner_out;
                    for (long q = 0; q < static_cast<long>(inner_toks.size()); ++q) {
                        std::string itx = detail::tok_text(inner, inner_toks[q]);
                        long ip = detail::prev_solid(inner_toks, q);
                        bool idot = ip >= 0 && detail::tok_text(inner, inner_toks[ip]) == ".";
                        auto it = rename.find(itx);
                        if (inner_toks[q].kind == PyKind::ident && !idot && it != rename.end())
                            inner_out += it->second;
                        else
                            inner_out += itx;
                    }
                    rebuilt += "{" + inner_out + "}";
                    k = close;
                    continue;
                }
                rebuilt += text[k];
                ++k;
            }
            out += rebuilt;
            continue;
        }
        out += text;
    }
    return out;
}

// ---------------------------------------------------------------------------
// line structure scan for insertion points and wrapping
// ---------------------------------------------------------------------------

struct LineInfo {
    std::size_t begin = 0; // byte offset of line start
    std::size_t end = 0;   // offset of '\n' or eof
    bool in_triple = false;      // line starts inside a triple-quoted string
    bool in_brackets = false;    // line starts inside (), [], {}
    bool after_backslash = false;
    std::string indent;
    bool blank = true;
    bool comment_only = false;
    char first_char = 0;
    std::string first_word;
};

inline std::vector<LineInfo> scan_lines(const std::string& src) {
    std::vector<LineInfo> lines;
    auto toks = lex_python(src);

    // map byte offset -> line index
    std::vector<std::size_t> line_of(src.size() + 1, 0);
    {
        std::size_t li = 0;
        LineInfo cur;
        cur.begin = 0;
        for (std::size_t i = 0; i <= src.size(); ++i) {
            line_of[i] = li;
            if (i == src.size() || src[i] == '\n') {
                cur.end = i;
                lines.push_back(cur);
                ++li;
                cur = LineInfo{};
                cur.begin = i + 1;
            }
        }
        if (lines.empty()) lines.push_back(cur);
    }

    // bracket depth / triple-string marks from the token stream
    long depth = 0;
    for (const auto& t : toks) {
        std::string text = detail::tok_text(src, t);
        if (t.kind == PyKind::op) {
            if (detail::is_open(text)) ++depth;
            if (detail::is_close(text)) --depth;
        }
        if (t.kind == PyKind::newline && depth > 0) {
            std::size_t next_line = line_of[t.end] ;
            if (next_line < lines.size()) lines[next_line].in_brackets = true;
        }
        if ((t.kind == PyKind::str || t.kind == PyKind::fstr) &&
            src.find('\n', t.begin) != std::string::npos &&
            src.find('\n', t.begin) < t.end) {
            // every line that starts strictly inside this literal
            std::size_t first = line_of[t.begin] + 1;
            std::size_t last = line_of[t.end - 1];
            for (std::size_t li = first; li <= last && li < lines.size(); ++li)
                lines[li].in_triple = true;
        }
    }

    for (std::size_t li = 0; li < lines.size(); ++li) {
        auto& L = lines[li];
        std::size_t i = L.begin;
        while (i < L.end && (src[i] == ' ' || src[i] == '\t')) ++i;
        L.indent = src.substr(L.begin, i - L.begin);
        L.blank = i >= L.end;
        if (!L.blank) {
            L.first_char = src[i];
            L.comment_only = src[i] == '#';
            std::size_t j = i;
            while (j < L.end && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
                ++j;
            L.first_word = src.substr(i, j - i);
        }
        if (li > 0) {
            const auto& prev = lines[li - 1];
            if (prev.end > prev.begin && src[prev.end - 1] == '\\' && !prev.in_triple)
                L.after_backslash = true;
        }
    }
    return lines;
}

// Indices of lines before which a statement can be inserted with the line's
// own indentation.
inline std::vector<std::size_t> safe_insertion_lines(const std::string& src,
                                                     const std::vector<LineInfo>& lines) {
    static const std::set<std::string> barred = {"else", "elif", "except", "finally", "case"};
    std::vector<std::size_t> out;
    for (std::size_t li = 0; li < lines.size(); ++li) {
        const auto& L = lines[li];
        if (L.blank || L.comment_only) continue;
        if (L.in_triple || L.in_brackets || L.after_backslash) continue;
        if (L.first_char == '@') continue;          // decorators stick to their def
        if (barred.count(L.first_word)) continue;   // clause continuations
        if (li > 0) {
            const auto& prev = lines[li - 1];
            if (!prev.blank && !prev.comment_only && !prev.in_triple && prev.first_char == '@')
                continue; // between decorator and def
        }
        out.push_back(li);
    }
    return out;
}

namespace detail {

inline std::string hex_of(std::uint64_t v) {
    static const char* k = "0123456789abcdef";
    std::string s;
    for (int i = 0; i < 8; ++i) s.push_back(k[(v >> (4 * i)) & 0xF]);
    return s;
}

inline std::vector<std::string> split_keep_lines(const std::string& s, bool& trailing_newline) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s[i] == '\n') {
            lines.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    trailing_newline = !s.empty() && s.back() == '\n';
    if (start < s.size()) lines.push_back(s.substr(start));
    return lines;
}

inline std::string join_lines(const std::vector<std::string>& lines, bool trailing_newline) {
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        out += lines[i];
        if (i + 1 < lines.size() || trailing_newline) out += '\n';
    }
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// dead code / print insertion
// ---------------------------------------------------------------------------

inline std::string insert_dead_code(const std::string& source, const std::string& language,
                                    std::uint64_t seed) {
    require_python(language);
    auto lines_info = scan_lines(source);
    auto spots = safe_insertion_lines(source, lines_info);
    if (spots.empty()) return source;

    Rng rng(seed ^ 0xDEADC0DEULL);
    int count = 1 + static_cast<int>(rng.below(3));
    std::string h = detail::hex_of(splitmix64(seed));

    bool trailing;
    auto lines = detail::split_keep_lines(source, trailing);
    // choose distinct insertion lines, insert bottom-up so indices stay valid
    std::vector<std::size_t> chosen;
    for (int k = 0; k < count; ++k) chosen.push_back(spots[rng.below(spots.size())]);
    std::sort(chosen.begin(), chosen.end(), std::greater<>());
    chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());

    int j = 0;
    for (std::size_t li : chosen) {
        const std::string& ind = lines_info[li].indent;
        std::string stmt;
        switch (rng.below(3)) {
            case 0:
                stmt = ind + "_dc_" + h + "_" + std::to_string(j) + " = " +
                       std::to_string(rng.below(1000));
                break;
            case 1:
                stmt = ind + "if False:\n" + ind + "    _dc_" + h + "_" + std::to_string(j) +
                       " = 0";
                break;
            default:
                stmt = ind + "_dc_" + h + "_" + std::to_string(j) + " = len('" + h + "')";
                break;
        }
        lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(li), stmt);
        ++j;
    }
    return detail::join_lines(lines, trailing);
}

inline std::string print_marker(std::uint64_t seed) {
    return "__cl_mark_" + detail::hex_of(splitmix64(seed));
}

inline std::string insert_print(const std::string& source, const std::string& language,
                                std::uint64_t seed) {
    require_python(language);
    auto lines_info = scan_lines(source);
    auto spots = safe_insertion_lines(source, lines_info);
    if (spots.empty()) return source;

    Rng rng(seed ^ 0x9417C0DEULL);
    int count = 1 + static_cast<int>(rng.below(3));
    std::string marker = print_marker(seed);

    bool trailing;
    auto lines = detail::split_keep_lines(source, trailing);
    std::vector<std::size_t> chosen;
    for (int k = 0; k < count; ++k) chosen.push_back(spots[rng.below(spots.size())]);
    std::sort(chosen.begin(), chosen.end(), std::greater<>());
    chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());

    int j = 0;
    for (std::size_t li : chosen) {
        const std::string& ind = lines_info[li].indent;
        lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(li),
                     ind + "print('" + marker + "_" + std::to_string(j) + "')");
        ++j;
    }
    return detail::join_lines(lines, trailing);
}

// ---------------------------------------------------------------------------
// try/except wrapping
// ---------------------------------------------------------------------------

namespace detail {

// shift a block of physical lines right by 4 spaces, leaving blank lines and
// triple-string interiors untouched
inline void indent_block(std::vector<std::string>& lines, const std::vector<LineInfo>& info,
                         std::size_t first, std::size_t last) {
    for (std::size_t li = first; li <= last && li < lines.size(); ++li) {
        if (lines[li].empty()) continue;
        if (info[li].in_triple) continue;
        lines[li] = "    " + lines[li];
    }
}

} // namespace detail

// Wraps the module body (or each top-level function body, seeded choice) in a
// re-raising exception handler.
inline std::string wrap_try_catch(const std::string& source, const std::string& language,
                                  std::uint64_t seed) {
    require_python(language);
    Rng rng(seed ^ 0x747C47C4ULL);
    auto info = scan_lines(source);
    bool trailing;
    auto lines = detail::split_keep_lines(source, trailing);
    if (lines.empty()) return source;

    // find top-level defs for the per-function mode
    std::vector<std::pair<std::size_t, std::size_t>> fn_bodies; // [first, last] body lines
    for (std::size_t li = 0; li < info.size() && li < lines.size(); ++li) {
        if (info[li].blank || info[li].in_triple || info[li].in_brackets) continue;
        if (info[li].indent.empty() && info[li].first_word == "def") {
            // statement may span lines; body starts after the line whose
            // bracket state closes and ends with ':'
            std::size_t header_end = li;
            while (header_end + 1 < info.size() &&
                   (info[header_end + 1].in_brackets || info[header_end + 1].after_backslash))
                ++header_end;
            std::size_t body_first = header_end + 1;
            std::size_t body_last = body_first;
            bool any = false;
            for (std::size_t j = body_first; j < info.size() && j < lines.size(); ++j) {
                if (info[j].blank || info[j].comment_only) {
                    if (any) body_last = j;
                    continue;
                }
                if (info[j].in_triple || info[j].in_brackets || info[j].after_backslash) {
                    body_last = j;
                    any = true;
                    continue;
                }
                if (info[j].indent.empty()) break; // dedent to top level
                body_last = j;
                any = true;
            }
            if (any) fn_bodies.emplace_back(body_first, body_last);
        }
    }

    bool per_function = !fn_bodies.empty() && rng.bernoulli(0.5);
    if (per_function) {
        // bottom-up so indices stay valid
        for (auto it = fn_bodies.rbegin(); it != fn_bodies.rend(); ++it) {
            auto [first, last] = *it;
            // trim trailing blank lines from the wrapped region
            while (last > first && lines[last].empty()) --last;
            std::string body_indent = "    ";
            for (std::size_t li = first; li <= last; ++li)
                if (!info[li].blank && !info[li].comment_only && !info[li].in_triple) {
                    body_indent = info[li].indent;
                    break;
                }
            detail::indent_block(lines, info, first, last);
            lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(last + 1),
                         {body_indent + "except BaseException:", body_indent + "    raise"});
            lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(first), body_indent + "try:");
        }
        return detail::join_lines(lines, trailing);
    }

    // module mode: keep shebang, encoding comments and __future__ imports on top
    std::size_t first = 0;
    for (std::size_t li = 0; li < info.size() && li < lines.size(); ++li) {
        if (info[li].blank || info[li].comment_only) {
            first = li + 1;
            continue;
        }
        if (info[li].first_word == "from" &&
            lines[li].find("__future__") != std::string::npos) {
            first = li + 1;
            continue;
        }
        break;
    }
    if (first >= lines.size()) return source;
    std::size_t last = lines.size() - 1;
    while (last > first && lines[last].empty()) --last;
    detail::indent_block(lines, info, first, last);
    lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(last + 1),
                 {"except BaseException:", "    raise"});
    lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(first), "try:");
    return detail::join_lines(lines, trailing);
}

// ---------------------------------------------------------------------------
// code mixing
// ---------------------------------------------------------------------------

// Replaces a contiguous block of ceil(ratio * lines) lines of the generated
// code with a contiguous block drawn from the human donor. Line count is
// preserved so length is not a confound.
inline std::string mix_code(const std::string& generated, const std::string& human, double ratio,
                            std::uint64_t seed) {
    if (generated.empty() || human.empty())
        throw Error("mix_code: both inputs must be non-empty");
    bool trailing;
    auto gen_lines = detail::split_keep_lines(generated, trailing);
    bool donor_trailing;
    auto human_lines = detail::split_keep_lines(human, donor_trailing);

    std::size_t n = gen_lines.size();
    std::size_t k = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n)));
    if (k == 0) return generated;
    if (human_lines.size() < k)
        throw InsufficientDonorError("mix_code: donor has " + std::to_string(human_lines.size()) +
                                     " lines, need " + std::to_string(k));

    Rng rng(seed ^ 0x313C0DE5ULL);
    std::size_t start_g = static_cast<std::size_t>(rng.below(n - k + 1));
    std::size_t start_h = static_cast<std::size_t>(rng.below(human_lines.size() - k + 1));
    for (std::size_t i = 0; i < k; ++i) gen_lines[start_g + i] = human_lines[start_h + i];
    return detail::join_lines(gen_lines, trailing);
}

struct AttackSpec {
    std::string kind; // mix | rename | dead_code | insert_print | wrap_try_catch
    double ratio = 0.3;
    std::uint64_t seed = 0;
    std::string language = "python";
};

inline std::string apply_attack(const AttackSpec& spec, const std::string& source,
                                const std::string& donor = "") {
    if (spec.kind == "mix") return mix_code(source, donor, spec.ratio, spec.seed);
    if (spec.kind == "rename") return rename_identifiers(source, spec.language, spec.seed);
    if (spec.kind == "dead_code") return insert_dead_code(source, spec.language, spec.seed);
    if (spec.kind == "insert_print") return insert_print(source, spec.language, spec.seed);
    if (spec.kind == "wrap_try_catch") return wrap_try_catch(source, spec.language, spec.seed);
    throw Error("unknown attack kind: " + spec.kind);
}

inline const std::vector<std::string>& attack_kinds() {
    static const std::vector<std::string> kinds = {"mix", "rename", "dead_code", "insert_print",
                                                   "wrap_try_catch"};
    return kinds;
}

} // namespace codelens::attacks
