#pragma once

// A tiny line-oriented language used by the fixture benchmark:
//
//   input a b              bind the test inputs, in order
//   let x = <expr>
//   if <expr> return <expr>
//   if <expr> let x = <expr>
//   return <expr>
//
// Expressions are 64-bit integers with + - * / %, comparisons
// (< <= > >= == !=), && || ! and parentheses. `#` starts a comment.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace repairbench::toy {

struct Token {
    enum class Kind { Number, Identifier, Keyword, Operator };
    Kind kind;
    std::string text;
    std::size_t offset = 0;  // byte offset in the source
    int line = 0;
};

/// Throws repairbench::Error(PARSE_ERROR) naming the line.
std::vector<Token> lex(std::string_view source);

struct Expr {
    enum class Kind { Number, Variable, Unary, Binary };
    Kind kind = Kind::Number;
    std::int64_t value = 0;
    std::string name;  // variable name or operator
    std::unique_ptr<Expr> lhs;
    std::unique_ptr<Expr> rhs;
};

struct Statement {
    enum class Kind { Input, Let, IfReturn, IfLet, Return };
    Kind kind = Kind::Return;
    int line = 0;
    std::vector<std::string> names;  // Input
    std::string target;              // Let, IfLet
    std::unique_ptr<Expr> condition; // IfReturn, IfLet
    std::unique_ptr<Expr> value;
    /// Source span of the condition, for mutations that wrap it.
    std::size_t condition_begin = 0;
    std::size_t condition_end = 0;
};

struct Program {
    std::vector<Statement> statements;
};

/// Throws repairbench::Error(PARSE_ERROR) naming the line.
Program parse_program(std::string_view source);

struct RunResult {
    std::optional<std::int64_t> value;
    std::string error;  // set when value is empty
};

RunResult run(const Program& program, const std::vector<std::int64_t>& inputs);

struct TestCase {
    std::string name;  // t1, t2, ... in file order
    std::vector<std::int64_t> inputs;
    std::int64_t expected = 0;
};

/// One test per line: `inputs... -> expected`. Throws PARSE_ERROR.
std::vector<TestCase> parse_tests(std::string_view text);

struct TestOutcome {
    std::string name;
    bool passed = false;
    std::string detail;
};

std::vector<TestOutcome> run_tests(const Program& program, const std::vector<TestCase>& tests);

/// True when the source parses and every test passes.
bool passes_all(std::string_view source, const std::vector<TestCase>& tests);

struct Edit {
    std::size_t offset = 0;
    std::size_t length = 0;
    std::string replacement;
};

/// One single-site change: relational swap, && / || swap, `!` removal, or
/// negation of an if-condition.
struct Mutation {
    std::string op;
    int line = 0;
    std::vector<Edit> edits;  // ascending, non-overlapping

    std::string describe() const;
};

inline constexpr std::string_view kRelationalOperators[] = {"<", "<=", ">", ">=", "==", "!="};

/// All mutations of a parseable source, in source order.
std::vector<Mutation> enumerate_mutations(std::string_view source);

std::string apply(std::string_view source, const Mutation& mutation);

/// Identity for seed 0, otherwise a reproducible shuffle of [0, n).
std::vector<std::size_t> enumeration_order(std::size_t n, std::uint64_t seed);

}  // namespace repairbench::toy
