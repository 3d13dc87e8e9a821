#include "toy.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "repairbench/error.hpp"

namespace repairbench::toy {

namespace {

[[noreturn]] void fail(int line, const std::string& message) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + message);
}

bool is_keyword(std::string_view w) { return w == "input" || w == "let" || w == "if" || w == "return"; }

bool is_relational(std::string_view op) {
    return std::find(std::begin(kRelationalOperators), std::end(kRelationalOperators), op) !=
           std::end(kRelationalOperators);
}

class Parser {
public:
    Parser(const std::vector<Token>& tokens, int line) : t_(tokens), line_(line) {}

    Statement statement() {
        Statement s;
        s.line = line_;
        const auto& head = expect_kind(Token::Kind::Keyword, "a statement keyword");
        if (head.text == "input") {
            s.kind = Statement::Kind::Input;
            while (!done()) s.names.push_back(expect_kind(Token::Kind::Identifier, "an input name").text);
        } else if (head.text == "let") {
            s.kind = Statement::Kind::Let;
            assignment(s);
        } else if (head.text == "return") {
            s.kind = Statement::Kind::Return;
            s.value = expression();
        } else if (head.text == "if") {
            s.condition_begin = peek("a condition").offset;
            s.condition = expression();
            s.condition_end = t_[pos_ - 1].offset + t_[pos_ - 1].text.size();
            const auto& k = expect_kind(Token::Kind::Keyword, "'return' or 'let'");
            if (k.text == "return") {
                s.kind = Statement::Kind::IfReturn;
                s.value = expression();
            } else if (k.text == "let") {
                s.kind = Statement::Kind::IfLet;
                assignment(s);
            } else {
                fail(line_, "expected 'return' or 'let' after the condition");
            }
        } else {
            fail(line_, "unexpected '" + head.text + "'");
        }
        if (!done()) fail(line_, "unexpected '" + t_[pos_].text + "'");
        return s;
    }

private:
    bool done() const { return pos_ >= t_.size(); }

    const Token& peek(const char* what) {
        if (done()) fail(line_, std::string("expected ") + what + " at end of line");
        return t_[pos_];
    }

    const Token& expect_kind(Token::Kind kind, const char* what) {
        const auto& tok = peek(what);
        if (tok.kind != kind) fail(line_, std::string("expected ") + what + ", got '" + tok.text + "'");
        ++pos_;
        return tok;
    }

    void expect_op(const char* op) {
        const auto& tok = peek(op);
        if (tok.kind != Token::Kind::Operator || tok.text != op)
            fail(line_, std::string("expected '") + op + "', got '" + tok.text + "'");
        ++pos_;
    }

    bool accept_op(std::string_view op) {
        if (!done() && t_[pos_].kind == Token::Kind::Operator && t_[pos_].text == op) {
            ++pos_;
            return true;
        }
        return false;
    }

    void assignment(Statement& s) {
        s.target = expect_kind(Token::Kind::Identifier, "a variable name").text;
        expect_op("=");
        s.value = expression();
    }

    static std::unique_ptr<Expr> binary(std::string op, std::unique_ptr<Expr> l, std::unique_ptr<Expr> r) {
        auto e = std::make_unique<Expr>();
        e->kind = Expr::Kind::Binary;
        e->name = std::move(op);
        e->lhs = std::move(l);
        e->rhs = std::move(r);
        return e;
    }

    std::unique_ptr<Expr> expression() { return disjunction(); }

    std::unique_ptr<Expr> disjunction() {
        auto e = conjunction();
        while (accept_op("||")) e = binary("||", std::move(e), conjunction());
        return e;
    }

    std::unique_ptr<Expr> conjunction() {
        auto e = comparison();
        while (accept_op("&&")) e = binary("&&", std::move(e), comparison());
        return e;
    }

    std::unique_ptr<Expr> comparison() {
        auto e = additive();
        if (!done() && t_[pos_].kind == Token::Kind::Operator && is_relational(t_[pos_].text)) {
            std::string op = t_[pos_++].text;
            e = binary(op, std::move(e), additive());
        }
        return e;
    }

    std::unique_ptr<Expr> additive() {
        auto e = multiplicative();
        for (;;) {
            if (accept_op("+"))
                e = binary("+", std::move(e), multiplicative());
            else if (accept_op("-"))
                e = binary("-", std::move(e), multiplicative());
            else
                return e;
        }
    }

    std::unique_ptr<Expr> multiplicative() {
        auto e = unary();
        for (;;) {
            if (accept_op("*"))
                e = binary("*", std::move(e), unary());
            else if (accept_op("/"))
                e = binary("/", std::move(e), unary());
            else if (accept_op("%"))
                e = binary("%", std::move(e), unary());
            else
                return e;
        }
    }

    std::unique_ptr<Expr> unary() {
        for (const char* op : {"!", "-"}) {
            if (accept_op(op)) {
                auto e = std::make_unique<Expr>();
                e->kind = Expr::Kind::Unary;
                e->name = op;
                e->lhs = unary();
                return e;
            }
        }
        return primary();
    }

    std::unique_ptr<Expr> primary() {
        const auto& tok = peek("an expression");
        auto e = std::make_unique<Expr>();
        if (tok.kind == Token::Kind::Number) {
            ++pos_;
            e->kind = Expr::Kind::Number;
            try {
                e->value = std::stoll(tok.text);
            } catch (const std::out_of_range&) {
                fail(line_, "number out of range: " + tok.text);
            }
            return e;
        }
        if (tok.kind == Token::Kind::Identifier) {
            ++pos_;
            e->kind = Expr::Kind::Variable;
            e->name = tok.text;
            return e;
        }
        if (accept_op("(")) {
            auto inner = expression();
            expect_op(")");
            return inner;
        }
        fail(line_, "unexpected '" + tok.text + "'");
    }

    const std::vector<Token>& t_;
    int line_;
    std::size_t pos_ = 0;
};

struct RuntimeError {
    std::string message;
};

std::int64_t wrap(std::uint64_t v) { return static_cast<std::int64_t>(v); }

std::int64_t eval(const Expr& e, const std::map<std::string, std::int64_t>& vars) {
    switch (e.kind) {
        case Expr::Kind::Number: return e.value;
        case Expr::Kind::Variable: {
            auto it = vars.find(e.name);
            if (it == vars.end()) throw RuntimeError{"undefined variable " + e.name};
            return it->second;
        }
        case Expr::Kind::Unary: {
            auto v = eval(*e.lhs, vars);
            if (e.name == "!") return v == 0 ? 1 : 0;
            return wrap(0 - static_cast<std::uint64_t>(v));
        }
        case Expr::Kind::Binary: break;
    }
    const auto& op = e.name;
    if (op == "&&") return eval(*e.lhs, vars) != 0 && eval(*e.rhs, vars) != 0 ? 1 : 0;
    if (op == "||") return eval(*e.lhs, vars) != 0 || eval(*e.rhs, vars) != 0 ? 1 : 0;
    auto l = eval(*e.lhs, vars);
    auto r = eval(*e.rhs, vars);
    auto ul = static_cast<std::uint64_t>(l), ur = static_cast<std::uint64_t>(r);
    if (op == "+") return wrap(ul + ur);
    if (op == "-") return wrap(ul - ur);
    if (op == "*") return wrap(ul * ur);
    if (op == "/" || op == "%") {
        if (r == 0) throw RuntimeError{"division by zero"};
        if (l == std::numeric_limits<std::int64_t>::min() && r == -1) throw RuntimeError{"division overflow"};
        return op == "/" ? l / r : l % r;
    }
    if (op == "<") return l < r;
    if (op == "<=") return l <= r;
    if (op == ">") return l > r;
    if (op == ">=") return l >= r;
    if (op == "==") return l == r;
    if (op == "!=") return l != r;
    throw RuntimeError{"unknown operator " + op};
}

}  // namespace

std::vector<Token> lex(std::string_view src) {
    std::vector<Token> out;
    int line = 1;
    std::size_t i = 0;
    while (i < src.size()) {
        char c = src[i];
        if (c == '\n') {
            ++line;
            ++i;
            continue;
        }
        if (c == '#') {
            while (i < src.size() && src[i] != '\n') ++i;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        std::size_t start = i;
        if (std::isdigit(static_cast<unsigned char>(c))) {
            while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
            out.push_back({Token::Kind::Number, std::string(src.substr(start, i - start)), start, line});
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (i < src.size() && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) ++i;
            std::string word(src.substr(start, i - start));
            auto kind = is_keyword(word) ? Token::Kind::Keyword : Token::Kind::Identifier;
            out.push_back({kind, std::move(word), start, line});
            continue;
        }
        static constexpr std::string_view two[] = {"<=", ">=", "==", "!=", "&&", "||"};
        bool matched = false;
        for (auto op : two)
            if (src.substr(i, 2) == op) {
                out.push_back({Token::Kind::Operator, std::string(op), start, line});
                i += 2;
                matched = true;
                break;
            }
        if (matched) continue;
        if (std::string_view("<>+-*/%!()=").find(c) != std::string_view::npos) {
            out.push_back({Token::Kind::Operator, std::string(1, c), start, line});
            ++i;
            continue;
        }
        fail(line, std::string("unexpected character '") + c + "'");
    }
    return out;
}

Program parse_program(std::string_view source) {
    auto tokens = lex(source);
    Program p;
    std::size_t i = 0;
    while (i < tokens.size()) {
        int line = tokens[i].line;
        std::vector<Token> line_tokens;
        while (i < tokens.size() && tokens[i].line == line) line_tokens.push_back(tokens[i++]);
        p.statements.push_back(Parser(line_tokens, line).statement());
    }
    if (p.statements.empty()) fail(1, "empty program");
    return p;
}

RunResult run(const Program& program, const std::vector<std::int64_t>& inputs) {
    std::map<std::string, std::int64_t> vars;
    try {
        for (const auto& s : program.statements) {
            switch (s.kind) {
                case Statement::Kind::Input:
                    if (s.names.size() != inputs.size())
                        throw RuntimeError{"expected " + std::to_string(s.names.size()) + " inputs, got " +
                                           std::to_string(inputs.size())};
                    for (std::size_t k = 0; k < s.names.size(); ++k) vars[s.names[k]] = inputs[k];
                    break;
                case Statement::Kind::Let: vars[s.target] = eval(*s.value, vars); break;
                case Statement::Kind::IfLet:
                    if (eval(*s.condition, vars) != 0) vars[s.target] = eval(*s.value, vars);
                    break;
                case Statement::Kind::IfReturn:
                    if (eval(*s.condition, vars) != 0) return {eval(*s.value, vars), {}};
                    break;
                case Statement::Kind::Return: return {eval(*s.value, vars), {}};
            }
        }
        return {std::nullopt, "no return reached"};
    } catch (const RuntimeError& e) {
        return {std::nullopt, e.message};
    }
}

std::vector<TestCase> parse_tests(std::string_view text) {
    std::vector<TestCase> out;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto arrow = raw.find("->");
        if (arrow == std::string::npos) fail(line, "test needs 'inputs -> expected'");
        TestCase t;
        t.name = "t" + std::to_string(out.size() + 1);
        std::istringstream lhs(raw.substr(0, arrow)), rhs(raw.substr(arrow + 2));
        std::string word;
        auto number = [&](const std::string& w) {
            try {
                std::size_t used = 0;
                auto v = std::stoll(w, &used);
                if (used != w.size()) throw std::invalid_argument(w);
                return static_cast<std::int64_t>(v);
            } catch (const std::exception&) {
                fail(line, "not an integer: '" + w + "'");
            }
        };
        while (lhs >> word) t.inputs.push_back(number(word));
        if (!(rhs >> word)) fail(line, "missing expected value");
        t.expected = number(word);
        if (rhs >> word) fail(line, "trailing text after the expected value");
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<TestOutcome> run_tests(const Program& program, const std::vector<TestCase>& tests) {
    std::vector<TestOutcome> out;
    for (const auto& t : tests) {
        auto r = run(program, t.inputs);
        TestOutcome o{t.name, false, {}};
        if (!r.value)
            o.detail = r.error;
        else if (*r.value != t.expected)
            o.detail = "expected " + std::to_string(t.expected) + ", got " + std::to_string(*r.value);
        else
            o.passed = true;
        out.push_back(std::move(o));
    }
    return out;
}

bool passes_all(std::string_view source, const std::vector<TestCase>& tests) {
    try {
        auto program = parse_program(source);
        for (const auto& t : tests) {
            auto r = run(program, t.inputs);
            if (!r.value || *r.value != t.expected) return false;
        }
        return true;
    } catch (const Error&) {
        return false;
    }
}

std::string Mutation::describe() const {
    std::string s = op + " at line " + std::to_string(line);
    return s;
}

std::vector<Mutation> enumerate_mutations(std::string_view source) {
    auto program = parse_program(source);
    auto tokens = lex(source);
    std::vector<Mutation> out;
    for (const auto& tok : tokens) {
        if (tok.kind != Token::Kind::Operator) continue;
        if (is_relational(tok.text)) {
            for (auto alt : kRelationalOperators)
                if (alt != tok.text)
                    out.push_back({tok.text + " -> " + std::string(alt), tok.line,
                                   {{tok.offset, tok.text.size(), std::string(alt)}}});
        } else if (tok.text == "&&" || tok.text == "||") {
            std::string alt = tok.text == "&&" ? "||" : "&&";
            out.push_back({tok.text + " -> " + alt, tok.line, {{tok.offset, 2, alt}}});
        } else if (tok.text == "!") {
            out.push_back({"remove !", tok.line, {{tok.offset, 1, ""}}});
        }
    }
    for (const auto& s : program.statements)
        if (s.condition)
            out.push_back({"negate condition", s.line, {{s.condition_begin, 0, "!("}, {s.condition_end, 0, ")"}}});
    std::stable_sort(out.begin(), out.end(),
                     [](const Mutation& a, const Mutation& b) { return a.edits.front().offset < b.edits.front().offset; });
    return out;
}

std::string apply(std::string_view source, const Mutation& m) {
    std::string out;
    std::size_t pos = 0;
    for (const auto& e : m.edits) {
        out.append(source.substr(pos, e.offset - pos));
        out += e.replacement;
        pos = e.offset + e.length;
    }
    out.append(source.substr(pos));
    return out;
}

std::vector<std::size_t> enumeration_order(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    if (seed == 0 || n < 2) return order;
    // Hand-rolled Fisher-Yates: std::shuffle differs between standard libraries.
    std::mt19937_64 rng(seed);
    for (std::size_t j = n - 1; j > 0; --j) std::swap(order[j], order[rng() % (j + 1)]);
    return order;
}

}  // namespace repairbench::toy
