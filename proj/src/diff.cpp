#include "repairbench/diff.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <vector>

namespace repairbench {

namespace {

struct Line {
    std::string_view text;  // without the terminator
    bool newline = true;

    bool operator==(const Line& o) const { return text == o.text && newline == o.newline; }
};

std::vector<Line> split(std::string_view s) {
    std::vector<Line> lines;
    std::size_t start = 0;
    while (start < s.size()) {
        auto nl = s.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.push_back({s.substr(start), false});
            break;
        }
        lines.push_back({s.substr(start, nl - start), true});
        start = nl + 1;
    }
    return lines;
}

enum class Op { Equal, Delete, Insert };

// Myers O((N+M)D) shortest edit script.
std::vector<Op> edit_script(const std::vector<Line>& a, const std::vector<Line>& b) {
    const int n = static_cast<int>(a.size()), m = static_cast<int>(b.size());
    const int max = n + m;
    const int offset = max + 1;
    std::vector<int> v(2 * max + 3, 0);
    std::vector<std::vector<int>> trace;
    int final_d = 0;
    for (int d = 0; d <= max; ++d) {
        trace.push_back(v);
        bool done = false;
        for (int k = -d; k <= d; k += 2) {
            int x = (k == -d || (k != d && v[offset + k - 1] < v[offset + k + 1])) ? v[offset + k + 1]
                                                                                   : v[offset + k - 1] + 1;
            int y = x - k;
            while (x < n && y < m && a[x] == b[y]) ++x, ++y;
            v[offset + k] = x;
            if (x >= n && y >= m) {
                done = true;
                break;
            }
        }
        if (done) {
            final_d = d;
            trace.push_back(v);
            break;
        }
    }

    std::vector<Op> ops;
    int x = n, y = m;
    for (int d = final_d; d > 0; --d) {
        const auto& pv = trace[d];  // state before step d
        int k = x - y;
        int prev_k = (k == -d || (k != d && pv[offset + k - 1] < pv[offset + k + 1])) ? k + 1 : k - 1;
        int prev_x = pv[offset + prev_k];
        int prev_y = prev_x - prev_k;
        while (x > prev_x && y > prev_y) {
            ops.push_back(Op::Equal);
            --x, --y;
        }
        ops.push_back(x == prev_x ? Op::Insert : Op::Delete);
        x = prev_x;
        y = prev_y;
    }
    while (x > 0 && y > 0) {
        ops.push_back(Op::Equal);
        --x, --y;
    }
    std::reverse(ops.begin(), ops.end());
    return ops;
}

void emit_line(std::ostringstream& out, char prefix, const Line& line) {
    out << prefix << line.text << '\n';
    if (!line.newline) out << "\\ No newline at end of file\n";
}

std::string range(std::size_t start, std::size_t count) {
    // A zero-length range names the line before the change.
    std::size_t shown = count == 0 ? start : start + 1;
    // Like GNU diff, a single-line range drops its count.
    if (count == 1) return std::to_string(shown);
    return std::to_string(shown) + "," + std::to_string(count);
}

bool parse_range(std::string_view s, std::size_t& start, std::size_t& count) {
    auto comma = s.find(',');
    auto first = s.substr(0, comma);
    if (std::from_chars(first.data(), first.data() + first.size(), start).ec != std::errc{}) return false;
    count = 1;
    if (comma != std::string_view::npos) {
        auto second = s.substr(comma + 1);
        if (std::from_chars(second.data(), second.data() + second.size(), count).ec != std::errc{}) return false;
    }
    return true;
}

}  // namespace

std::string unified_diff(std::string_view before, std::string_view after, std::string_view path, int context) {
    auto a = split(before), b = split(after);
    auto ops = edit_script(a, b);
    if (std::all_of(ops.begin(), ops.end(), [](Op o) { return o == Op::Equal; })) return {};

    // Position of each op in both sequences.
    struct Step {
        Op op;
        std::size_t ai, bi;
    };
    std::vector<Step> steps;
    std::size_t ai = 0, bi = 0;
    for (Op op : ops) {
        steps.push_back({op, ai, bi});
        if (op != Op::Insert) ++ai;
        if (op != Op::Delete) ++bi;
    }

    std::ostringstream out;
    out << "--- a/" << path << "\n+++ b/" << path << "\n";
    const std::size_t ctx = static_cast<std::size_t>(std::max(context, 0));
    std::size_t i = 0;
    while (i < steps.size()) {
        while (i < steps.size() && steps[i].op == Op::Equal) ++i;
        if (i == steps.size()) break;
        std::size_t begin = i >= ctx ? i - ctx : 0;
        // Extend while the next change is within 2*ctx equal lines.
        std::size_t end = i;
        for (;;) {
            while (end < steps.size() && steps[end].op != Op::Equal) ++end;
            std::size_t run = end;
            while (run < steps.size() && steps[run].op == Op::Equal) ++run;
            if (run < steps.size() && run - end <= 2 * ctx) {
                end = run;
                continue;
            }
            end = std::min(end + ctx, run);
            break;
        }
        std::size_t a_start = steps[begin].ai, b_start = steps[begin].bi, a_count = 0, b_count = 0;
        for (std::size_t s = begin; s < end; ++s) {
            if (steps[s].op != Op::Insert) ++a_count;
            if (steps[s].op != Op::Delete) ++b_count;
        }
        out << "@@ -" << range(a_start, a_count) << " +" << range(b_start, b_count) << " @@\n";
        for (std::size_t s = begin; s < end; ++s) {
            switch (steps[s].op) {
                case Op::Equal: emit_line(out, ' ', a[steps[s].ai]); break;
                case Op::Delete: emit_line(out, '-', a[steps[s].ai]); break;
                case Op::Insert: emit_line(out, '+', b[steps[s].bi]); break;
            }
        }
        i = end;
    }
    return out.str();
}

std::optional<std::string> apply_unified_diff(std::string_view original, std::string_view diff) {
    auto src = split(original);
    auto lines = split(diff);
    std::vector<Line> result;
    std::size_t cursor = 0;  // next unconsumed line of `src`
    std::size_t i = 0;
    bool saw_hunk = false;

    while (i < lines.size()) {
        std::string_view l = lines[i].text;
        if (!l.starts_with("@@ ")) {
            ++i;
            continue;
        }
        saw_hunk = true;
        auto minus = l.find('-'), plus = l.find(" +");
        if (minus == std::string_view::npos || plus == std::string_view::npos) return std::nullopt;
        auto end_marker = l.find(" @@", plus + 2);
        if (end_marker == std::string_view::npos) return std::nullopt;
        std::size_t a_start, a_count, b_start, b_count;
        if (!parse_range(l.substr(minus + 1, plus - minus - 1), a_start, a_count)) return std::nullopt;
        if (!parse_range(l.substr(plus + 2, end_marker - plus - 2), b_start, b_count)) return std::nullopt;
        std::size_t hunk_pos = a_count == 0 ? a_start : a_start - 1;
        if (hunk_pos < cursor || hunk_pos > src.size()) return std::nullopt;
        while (cursor < hunk_pos) result.push_back(src[cursor++]);
        ++i;

        std::size_t seen_a = 0, seen_b = 0;
        while (i < lines.size() && (seen_a < a_count || seen_b < b_count)) {
            std::string_view hl = lines[i].text;
            if (hl.empty()) return std::nullopt;
            Line body{hl.substr(1), true};
            if (i + 1 < lines.size() && lines[i + 1].text.starts_with("\\")) body.newline = false;
            char tag = hl[0];
            if (tag == ' ' || tag == '-') {
                if (cursor >= src.size() || !(src[cursor] == body)) return std::nullopt;
                if (tag == ' ') result.push_back(src[cursor]);
                ++cursor;
                ++seen_a;
                if (tag == ' ') ++seen_b;
            } else if (tag == '+') {
                result.push_back(body);
                ++seen_b;
            } else {
                return std::nullopt;
            }
            i += body.newline ? 1 : 2;
        }
        if (seen_a != a_count || seen_b != b_count) return std::nullopt;
    }
    if (!saw_hunk && !diff.empty()) return std::nullopt;
    while (cursor < src.size()) result.push_back(src[cursor++]);

    std::string out;
    for (const auto& line : result) {
        out.append(line.text);
        if (line.newline) out.push_back('\n');
    }
    return out;
}

}  // namespace repairbench
