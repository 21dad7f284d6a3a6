#include "testmine/java/java_parser.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <utility>

#include "testmine/error.hpp"

namespace testmine::java {

namespace {

enum class Tok { kIdent, kLiteral, kSymbol };

struct Token {
    Tok kind;
    std::string_view text;
    std::size_t offset;
    std::size_t line;
};

bool ident_start(unsigned char c) {
    return std::isalpha(c) || c == '_' || c == '$' || c >= 0x80;
}

bool ident_part(unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80;
}

[[noreturn]] void fail(std::string_view file, std::size_t line, const std::string& what) {
    throw Error(ErrorCode::parse,
                std::string(file) + ":" + std::to_string(line) + ": " + what);
}

class Lexer {
public:
    Lexer(std::string_view src, std::string_view file) : src_(src), file_(file) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (pos_ < src_.size()) {
            unsigned char c = static_cast<unsigned char>(src_[pos_]);
            if (c == '\n') {
                ++line_;
                ++pos_;
            } else if (std::isspace(c)) {
                ++pos_;
            } else if (c == '/' && peek(1) == '/') {
                while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
            } else if (c == '/' && peek(1) == '*') {
                skip_block_comment();
            } else if (c == '"') {
                out.push_back(string_literal());
            } else if (c == '\'') {
                out.push_back(char_literal());
            } else if (std::isdigit(c) || (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
                std::size_t b = pos_;
                while (pos_ < src_.size() &&
                       (ident_part(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) {
                    ++pos_;
                }
                out.push_back({Tok::kLiteral, src_.substr(b, pos_ - b), b, line_});
            } else if (ident_start(c)) {
                std::size_t b = pos_;
                while (pos_ < src_.size() && ident_part(static_cast<unsigned char>(src_[pos_]))) ++pos_;
                out.push_back({Tok::kIdent, src_.substr(b, pos_ - b), b, line_});
            } else {
                out.push_back({Tok::kSymbol, src_.substr(pos_, 1), pos_, line_});
                ++pos_;
            }
        }
        return out;
    }

private:
    char peek(std::size_t k) const {
        return pos_ + k < src_.size() ? src_[pos_ + k] : '\0';
    }

    void skip_block_comment() {
        std::size_t start_line = line_;
        pos_ += 2;
        while (pos_ + 1 < src_.size() && !(src_[pos_] == '*' && src_[pos_ + 1] == '/')) {
            if (src_[pos_] == '\n') ++line_;
            ++pos_;
        }
        if (pos_ + 1 >= src_.size()) fail(file_, start_line, "unterminated block comment");
        pos_ += 2;
    }

    Token string_literal() {
        std::size_t b = pos_;
        std::size_t start_line = line_;
        if (peek(1) == '"' && peek(2) == '"') {
            pos_ += 3;
            while (pos_ < src_.size()) {
                if (src_[pos_] == '\\') {
                    pos_ += 2;
                    continue;
                }
                if (src_[pos_] == '\n') ++line_;
                if (src_.substr(pos_, 3) == "\"\"\"") {
                    pos_ += 3;
                    return {Tok::kLiteral, src_.substr(b, pos_ - b), b, start_line};
                }
                ++pos_;
            }
            fail(file_, start_line, "unterminated text block");
        }
        ++pos_;
        while (pos_ < src_.size() && src_[pos_] != '"') {
            if (src_[pos_] == '\n') fail(file_, start_line, "unterminated string literal");
            if (src_[pos_] == '\\') ++pos_;
            ++pos_;
        }
        if (pos_ >= src_.size()) fail(file_, start_line, "unterminated string literal");
        ++pos_;
        return {Tok::kLiteral, src_.substr(b, pos_ - b), b, start_line};
    }

    Token char_literal() {
        std::size_t b = pos_;
        ++pos_;
        while (pos_ < src_.size() && src_[pos_] != '\'') {
            if (src_[pos_] == '\n') fail(file_, line_, "unterminated character literal");
            if (src_[pos_] == '\\') ++pos_;
            ++pos_;
        }
        if (pos_ >= src_.size()) fail(file_, line_, "unterminated character literal");
        ++pos_;
        return {Tok::kLiteral, src_.substr(b, pos_ - b), b, line_};
    }

    std::string_view src_;
    std::string_view file_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
};

std::string collapse_ws(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char ch : s) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(ch);
    }
    return out;
}

constexpr std::array<std::string_view, 53> kKeywords = {
    "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char", "class",
    "const", "continue", "default", "do", "double", "else", "enum", "extends", "final",
    "finally", "float", "for", "goto", "if", "implements", "import", "instanceof", "int",
    "interface", "long", "native", "new", "package", "private", "protected", "public",
    "return", "short", "static", "strictfp", "super", "switch", "synchronized", "this",
    "throw", "throws", "transient", "try", "void", "volatile", "while", "true", "false",
    "null",
};

struct Modifiers {
    ModifierSet set;
    std::vector<std::string> annotations;
    // Token index ranges [first, last] of each annotation, for signature text.
    std::vector<std::pair<std::size_t, std::size_t>> annotation_ranges;
    std::size_t first_token = 0;
};

class Parser {
public:
    Parser(std::string_view src, std::string_view file, std::vector<Token> toks)
        : src_(src), file_(file), toks_(std::move(toks)) {}

    std::vector<JavaClassDecl> run() {
        while (i_ < toks_.size()) {
            if (sym(";")) {
                ++i_;
            } else if (word("package")) {
                ++i_;
                package_ = qualified_name();
                expect(";");
            } else if (word("import")) {
                ++i_;
                std::string imp;
                if (word("static")) {
                    imp = "static ";
                    ++i_;
                }
                imp += qualified_name();
                if (sym(".") && sym_at(i_ + 1, "*")) {
                    imp += ".*";
                    i_ += 2;
                }
                expect(";");
                imports_.push_back(std::move(imp));
            } else if (word("module") || (word("open") && word_at(i_ + 1, "module"))) {
                // module-info.java carries no types.
                i_ = toks_.size();
            } else {
                Modifiers mods = modifiers();
                if (!type_decl_ahead()) fail_here("expected a type declaration");
                type_decl(std::move(mods), std::nullopt);
            }
        }
        return std::move(out_);
    }

private:
    bool sym_at(std::size_t k, std::string_view s) const {
        return k < toks_.size() && toks_[k].kind == Tok::kSymbol && toks_[k].text == s;
    }
    bool word_at(std::size_t k, std::string_view s) const {
        return k < toks_.size() && toks_[k].kind == Tok::kIdent && toks_[k].text == s;
    }
    bool sym(std::string_view s) const { return sym_at(i_, s); }
    bool word(std::string_view s) const { return word_at(i_, s); }
    bool ident() const { return i_ < toks_.size() && toks_[i_].kind == Tok::kIdent; }

    [[noreturn]] void fail_here(const std::string& what) const {
        std::size_t line = i_ < toks_.size() ? toks_[i_].line : (toks_.empty() ? 1 : toks_.back().line);
        std::string near = i_ < toks_.size() ? " near '" + std::string(toks_[i_].text) + "'" : " at end of file";
        fail(file_, line, what + near);
    }

    void expect(std::string_view s) {
        if (!sym(s)) fail_here("expected '" + std::string(s) + "'");
        ++i_;
    }

    std::string identifier() {
        if (!ident()) fail_here("expected identifier");
        return std::string(toks_[i_++].text);
    }

    std::string qualified_name() {
        std::string name = identifier();
        while (sym(".") && i_ + 1 < toks_.size() && toks_[i_ + 1].kind == Tok::kIdent) {
            name += ".";
            ++i_;
            name += identifier();
        }
        return name;
    }

    // At `open`, returns the index of the matching `close`.
    std::size_t match(std::string_view open, std::string_view close) {
        std::size_t depth = 0;
        for (std::size_t k = i_; k < toks_.size(); ++k) {
            if (sym_at(k, open)) {
                ++depth;
            } else if (sym_at(k, close)) {
                if (--depth == 0) return k;
            }
        }
        fail_here("unbalanced '" + std::string(open) + "'");
    }

    void skip_balanced(std::string_view open, std::string_view close) { i_ = match(open, close) + 1; }

    // Skips to the ';' terminating a field or annotation default, honoring
    // nested brackets (anonymous classes, lambdas, array initializers).
    void skip_to_semicolon() {
        int depth = 0;
        while (i_ < toks_.size()) {
            if (toks_[i_].kind == Tok::kSymbol) {
                char c = toks_[i_].text[0];
                if (c == '(' || c == '{' || c == '[') ++depth;
                if (c == ')' || c == '}' || c == ']') {
                    if (depth == 0) fail_here("unexpected closing bracket");
                    --depth;
                }
                if (c == ';' && depth == 0) {
                    ++i_;
                    return;
                }
            }
            ++i_;
        }
        fail_here("missing ';'");
    }

    std::string annotation(Modifiers& mods) {
        std::size_t first = i_;
        ++i_;  // '@'
        std::string name = qualified_name();
        if (sym("(")) skip_balanced("(", ")");
        mods.annotation_ranges.emplace_back(first, i_ - 1);
        return name;
    }

    Modifiers modifiers() {
        Modifiers mods;
        mods.first_token = i_;
        while (i_ < toks_.size()) {
            if (sym("@") && !word_at(i_ + 1, "interface")) {
                mods.annotations.push_back(annotation(mods));
            } else if (word("non") && sym_at(i_ + 1, "-") && word_at(i_ + 2, "sealed")) {
                mods.set.insert(Modifier::kNonSealed);
                i_ += 3;
            } else if (ident()) {
                auto m = modifier_from_keyword(toks_[i_].text);
                if (!m) break;
                // `sealed` and `default` are contextual.
                if (*m == Modifier::kSealed && !(i_ + 1 < toks_.size() && toks_[i_ + 1].kind == Tok::kIdent)) break;
                if (*m == Modifier::kDefault && (sym_at(i_ + 1, ":") || sym_at(i_ + 1, "-"))) break;
                mods.set.insert(*m);
                ++i_;
            } else {
                break;
            }
        }
        return mods;
    }

    bool type_decl_ahead() const {
        if (word("class") || word("interface") || word("enum")) return true;
        if (sym("@") && word_at(i_ + 1, "interface")) return true;
        return word("record") && i_ + 1 < toks_.size() && toks_[i_ + 1].kind == Tok::kIdent &&
               (sym_at(i_ + 2, "(") || sym_at(i_ + 2, "<"));
    }

    // Type name after `extends`, generic arguments and type annotations dropped.
    std::string type_reference() {
        Modifiers ignored;
        while (sym("@")) annotation(ignored);
        std::string name = qualified_name();
        if (sym("<")) skip_balanced("<", ">");
        while (sym(".") && i_ + 1 < toks_.size() && toks_[i_ + 1].kind == Tok::kIdent) {
            ++i_;
            name = name + "." + identifier();
            if (sym("<")) skip_balanced("<", ">");
        }
        return name;
    }

    void type_decl(Modifiers mods, const std::optional<std::string>& outer) {
        JavaClassDecl cls;
        std::size_t decl_line = toks_[mods.first_token < toks_.size() ? mods.first_token : i_].line;
        if (sym("@")) {
            cls.kind = TypeKind::kAnnotation;
            i_ += 2;
        } else {
            auto kw = toks_[i_].text;
            cls.kind = kw == "class"       ? TypeKind::kClass
                       : kw == "interface" ? TypeKind::kInterface
                       : kw == "enum"      ? TypeKind::kEnum
                                           : TypeKind::kRecord;
            ++i_;
        }
        cls.simple_name = identifier();
        cls.qualified_name = outer ? *outer + "." + cls.simple_name
                                   : (package_.empty() ? cls.simple_name : package_ + "." + cls.simple_name);
        cls.enclosing = outer;
        cls.modifiers = mods.set;
        cls.annotations = std::move(mods.annotations);
        cls.source_file = std::string(file_);
        cls.package_name = package_;
        cls.imports = imports_;
        cls.line = decl_line;

        if (sym("<")) skip_balanced("<", ">");
        if (cls.kind == TypeKind::kRecord && sym("(")) skip_balanced("(", ")");
        while (i_ < toks_.size() && !sym("{")) {
            if (word("extends")) {
                ++i_;
                std::string first = type_reference();
                if (cls.kind == TypeKind::kClass) cls.supertype_name = first;
                while (sym(",")) {
                    ++i_;
                    type_reference();
                }
            } else if (word("implements") || word("permits")) {
                ++i_;
                type_reference();
                while (sym(",")) {
                    ++i_;
                    type_reference();
                }
            } else {
                fail_here("unexpected token in type header");
            }
        }
        if (i_ >= toks_.size()) fail_here("missing type body");

        std::size_t slot = out_.size();
        out_.push_back(std::move(cls));
        class_body(slot);
    }

    void enum_constants() {
        while (i_ < toks_.size()) {
            if (sym(";")) {
                ++i_;
                return;
            }
            if (sym("}")) return;
            if (sym(",")) {
                ++i_;
                continue;
            }
            Modifiers ignored;
            while (sym("@")) annotation(ignored);
            identifier();
            if (sym("(")) skip_balanced("(", ")");
            if (sym("{")) skip_balanced("{", "}");
        }
    }

    void class_body(std::size_t slot) {
        expect("{");
        if (out_[slot].kind == TypeKind::kEnum) enum_constants();
        const std::string qualified = out_[slot].qualified_name;
        const bool is_interface =
            out_[slot].kind == TypeKind::kInterface || out_[slot].kind == TypeKind::kAnnotation;
        while (true) {
            if (i_ >= toks_.size()) fail_here("unterminated type body of " + qualified);
            if (sym("}")) {
                ++i_;
                return;
            }
            if (sym(";")) {
                ++i_;
                continue;
            }
            if (sym("{")) {
                skip_balanced("{", "}");
                continue;
            }
            if (word("static") && sym_at(i_ + 1, "{")) {
                ++i_;
                skip_balanced("{", "}");
                continue;
            }
            Modifiers mods = modifiers();
            if (type_decl_ahead()) {
                type_decl(std::move(mods), qualified);
                continue;
            }
            if (auto m = member(mods, is_interface)) {
                out_[slot].methods.push_back(std::move(*m));
            }
        }
    }

    std::string signature_text(const Modifiers& mods, std::size_t end_exclusive) const {
        std::string text;
        std::size_t k = mods.first_token;
        std::size_t r = 0;
        while (k < end_exclusive) {
            if (r < mods.annotation_ranges.size() && mods.annotation_ranges[r].first == k) {
                k = mods.annotation_ranges[r].second + 1;
                ++r;
                continue;
            }
            std::size_t seg_begin = k;
            while (k < end_exclusive &&
                   !(r < mods.annotation_ranges.size() && mods.annotation_ranges[r].first == k)) {
                ++k;
            }
            const auto& a = toks_[seg_begin];
            const auto& b = toks_[k - 1];
            if (!text.empty()) text += ' ';
            text += src_.substr(a.offset, b.offset + b.text.size() - a.offset);
        }
        return collapse_ws(text);
    }

    std::optional<JavaMethodDecl> member(const Modifiers& mods, bool in_interface) {
        if (sym("<")) skip_balanced("<", ">");
        std::size_t type_begin = i_;
        int angle = 0;
        while (i_ < toks_.size()) {
            if (sym("<")) {
                ++angle;
            } else if (sym(">")) {
                --angle;
            } else if (angle == 0 && (sym("(") || sym("=") || sym(";") || sym("{") || sym("}"))) {
                break;
            } else if (sym("@")) {
                Modifiers ignored;
                annotation(ignored);
                continue;
            }
            ++i_;
        }
        if (i_ >= toks_.size()) fail_here("unterminated member declaration");

        if (sym("{")) {  // compact record constructor
            skip_balanced("{", "}");
            return std::nullopt;
        }
        if (!sym("(")) {
            if (sym("}")) fail_here("unexpected '}' in member declaration");
            skip_to_semicolon();
            return std::nullopt;
        }

        if (i_ == type_begin || toks_[i_ - 1].kind != Tok::kIdent) fail_here("malformed method header");
        std::size_t name_tok = i_ - 1;
        const bool constructor = name_tok == type_begin;

        std::size_t close = match("(", ")");
        JavaMethodDecl m;
        m.name = std::string(toks_[name_tok].text);
        if (!constructor) {
            const auto& a = toks_[type_begin];
            const auto& b = toks_[name_tok - 1];
            m.return_type = collapse_ws(src_.substr(a.offset, b.offset + b.text.size() - a.offset));
        }
        if (close > i_ + 1) {
            const auto& a = toks_[i_ + 1];
            const auto& b = toks_[close - 1];
            m.parameters = collapse_ws(src_.substr(a.offset, b.offset + b.text.size() - a.offset));
            int depth = 0;
            m.parameter_count = 1;
            for (std::size_t k = i_ + 1; k < close; ++k) {
                if (sym_at(k, "<") || sym_at(k, "(")) ++depth;
                if (sym_at(k, ">") || sym_at(k, ")")) --depth;
                if (depth == 0 && sym_at(k, ",")) ++m.parameter_count;
            }
        }
        i_ = close + 1;
        while (i_ < toks_.size() && !sym("{") && !sym(";")) {
            if (word("default")) {
                skip_to_semicolon();
                --i_;
                break;
            }
            ++i_;
        }
        if (i_ >= toks_.size()) fail_here("unterminated method declaration");
        std::size_t header_end = i_;
        std::size_t last = i_;
        if (sym("{")) {
            last = match("{", "}");
            m.has_body = true;
        }
        i_ = last + 1;

        m.annotations = mods.annotations;
        m.modifiers = mods.set;
        if (in_interface && !m.has_body) m.modifiers.insert(Modifier::kAbstract);
        m.signature = signature_text(mods, header_end);
        const auto& first = toks_[mods.first_token];
        const auto& end_tok = toks_[last];
        m.body_source = std::string(src_.substr(first.offset, end_tok.offset + end_tok.text.size() - first.offset));
        m.line_span = {first.line, end_tok.line};
        if (constructor) return std::nullopt;
        return m;
    }

    std::string_view src_;
    std::string_view file_;
    std::vector<Token> toks_;
    std::size_t i_ = 0;
    std::string package_;
    std::vector<std::string> imports_;
    std::vector<JavaClassDecl> out_;
};

}  // namespace

std::vector<std::string> ModifierSet::names() const {
    static constexpr std::array<std::pair<Modifier, std::string_view>, 14> kNames = {{
        {Modifier::kPublic, "public"},
        {Modifier::kProtected, "protected"},
        {Modifier::kPrivate, "private"},
        {Modifier::kAbstract, "abstract"},
        {Modifier::kStatic, "static"},
        {Modifier::kFinal, "final"},
        {Modifier::kSealed, "sealed"},
        {Modifier::kNonSealed, "non-sealed"},
        {Modifier::kDefault, "default"},
        {Modifier::kSynchronized, "synchronized"},
        {Modifier::kNative, "native"},
        {Modifier::kTransient, "transient"},
        {Modifier::kVolatile, "volatile"},
        {Modifier::kStrictfp, "strictfp"},
    }};
    std::vector<std::string> out;
    for (const auto& [m, name] : kNames) {
        if (has(m)) out.emplace_back(name);
    }
    return out;
}

std::optional<Modifier> modifier_from_keyword(std::string_view w) {
    if (w == "public") return Modifier::kPublic;
    if (w == "protected") return Modifier::kProtected;
    if (w == "private") return Modifier::kPrivate;
    if (w == "static") return Modifier::kStatic;
    if (w == "final") return Modifier::kFinal;
    if (w == "abstract") return Modifier::kAbstract;
    if (w == "native") return Modifier::kNative;
    if (w == "synchronized") return Modifier::kSynchronized;
    if (w == "transient") return Modifier::kTransient;
    if (w == "volatile") return Modifier::kVolatile;
    if (w == "strictfp") return Modifier::kStrictfp;
    if (w == "default") return Modifier::kDefault;
    if (w == "sealed") return Modifier::kSealed;
    return std::nullopt;
}

std::vector<JavaClassDecl> parse_java_source(std::string_view source, std::string_view file_path) {
    auto toks = Lexer(source, file_path).run();
    return Parser(source, file_path, std::move(toks)).run();
}

std::string_view simple_name(std::string_view qualified) {
    auto dot = qualified.rfind('.');
    return dot == std::string_view::npos ? qualified : qualified.substr(dot + 1);
}

bool has_annotation(const std::vector<std::string>& annotations, std::string_view simple) {
    return std::any_of(annotations.begin(), annotations.end(),
                       [&](const std::string& a) { return simple_name(a) == simple; });
}

bool is_java_keyword(std::string_view word) {
    return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

std::vector<std::string> lex_identifiers(std::string_view source) {
    std::vector<std::string> out;
    for (const auto& t : Lexer(source, "<text>").run()) {
        if (t.kind == Tok::kIdent && !is_java_keyword(t.text)) out.emplace_back(t.text);
    }
    return out;
}

}  // namespace testmine::java
