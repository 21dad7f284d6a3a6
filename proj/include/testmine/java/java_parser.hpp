#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace testmine::java {

enum class Modifier : std::uint16_t {
    kPublic = 1u << 0,
    kProtected = 1u << 1,
    kPrivate = 1u << 2,
    kStatic = 1u << 3,
    kFinal = 1u << 4,
    kAbstract = 1u << 5,
    kNative = 1u << 6,
    kSynchronized = 1u << 7,
    kTransient = 1u << 8,
    kVolatile = 1u << 9,
    kStrictfp = 1u << 10,
    kDefault = 1u << 11,
    kSealed = 1u << 12,
    kNonSealed = 1u << 13,
};

class ModifierSet {
public:
    constexpr ModifierSet() = default;

    constexpr bool has(Modifier m) const noexcept {
        return (bits_ & static_cast<std::uint16_t>(m)) != 0;
    }
    constexpr void insert(Modifier m) noexcept { bits_ |= static_cast<std::uint16_t>(m); }
    constexpr bool empty() const noexcept { return bits_ == 0; }
    std::vector<std::string> names() const;

    friend constexpr bool operator==(ModifierSet, ModifierSet) = default;

private:
    std::uint16_t bits_ = 0;
};

std::optional<Modifier> modifier_from_keyword(std::string_view word);

struct LineSpan {
    std::size_t start = 0;  // 1-based, inclusive
    std::size_t end = 0;

    friend bool operator==(const LineSpan&, const LineSpan&) = default;
};

struct JavaMethodDecl {
    std::string name;
    std::vector<std::string> annotations;  // as written, without '@' or arguments
    ModifierSet modifiers;
    std::string return_type;
    std::string parameters;  // text between the parentheses, whitespace-collapsed
    std::size_t parameter_count = 0;
    std::string signature;   // declaration header without annotations, e.g. "public void t()"
    std::string body_source; // verbatim declaration text, annotations through closing brace
    bool has_body = false;
    LineSpan line_span;
};

enum class TypeKind { kClass, kInterface, kEnum, kRecord, kAnnotation };

struct JavaClassDecl {
    std::string qualified_name;
    std::string simple_name;
    TypeKind kind = TypeKind::kClass;
    std::optional<std::string> supertype_name;  // as written, generic arguments stripped
    std::vector<std::string> annotations;
    ModifierSet modifiers;
    std::vector<JavaMethodDecl> methods;
    std::string source_file;
    std::string package_name;
    std::vector<std::string> imports;  // "a.b.C", "a.b.*", static imports prefixed "static "
    std::optional<std::string> enclosing;  // qualified name of the outer type
    std::size_t line = 0;
};

/// Structural parse of one compilation unit: package, imports, and every
/// top-level and member type declaration with its methods. Bodies are
/// brace-matched, not parsed; local and anonymous classes are not reported.
/// Throws Error(parse) on unterminated literals/comments or unbalanced
/// declarations.
std::vector<JavaClassDecl> parse_java_source(std::string_view source, std::string_view file_path);

/// Last segment of a dotted name ("org.junit.Test" -> "Test").
std::string_view simple_name(std::string_view qualified);

bool has_annotation(const std::vector<std::string>& annotations, std::string_view simple);

bool is_java_keyword(std::string_view word);

// Lexical view used by identifier extraction: identifier tokens only, in
// source order, comments and literals excluded, keywords dropped.
std::vector<std::string> lex_identifiers(std::string_view source);

}  // namespace testmine::java
