#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "iotllm/error.hpp"
#include "iotllm/toml_lite.hpp"

using nlohmann::json;

namespace iotllm::toml {

namespace {

class Parser {
  public:
    Parser(std::string_view text, std::string_view source) : s_(text), source_(source) {}

    json document()
    {
        json root = json::object();
        json* current = &root;
        while (true) {
            skip_blank_lines();
            if (eof()) {
                break;
            }
            if (peek() == '[') {
                current = header(root);
            } else {
                key_value(*current);
            }
            end_of_line();
        }
        return root;
    }

  private:
    [[noreturn]] void fail(const std::string& what) const
    {
        throw Error(ErrorCode::config, fmt::format("{}:{}: {}", source_, line_, what));
    }

    bool eof() const { return pos_ >= s_.size(); }
    char peek(std::size_t ahead = 0) const { return pos_ + ahead < s_.size() ? s_[pos_ + ahead] : '\0'; }
    bool starts_with(std::string_view p) const { return s_.substr(pos_).starts_with(p); }

    char take()
    {
        const char c = s_[pos_++];
        if (c == '\n') {
            ++line_;
        }
        return c;
    }

    void expect(char c)
    {
        if (peek() != c) {
            fail(fmt::format("expected '{}'", c));
        }
        take();
    }

    void skip_ws()
    {
        while (peek() == ' ' || peek() == '\t') {
            take();
        }
    }

    void skip_comment()
    {
        if (peek() == '#') {
            while (!eof() && peek() != '\n') {
                take();
            }
        }
    }

    /// Whitespace, newlines and comments, as allowed inside arrays.
    void skip_ws_lines()
    {
        while (true) {
            skip_ws();
            skip_comment();
            if (peek() == '\n' || peek() == '\r') {
                take();
            } else {
                return;
            }
        }
    }

    void skip_blank_lines() { skip_ws_lines(); }

    void end_of_line()
    {
        skip_ws();
        skip_comment();
        if (peek() == '\r') {
            take();
        }
        if (!eof() && peek() != '\n') {
            fail(fmt::format("unexpected '{}' after value", peek()));
        }
        if (!eof()) {
            take();
        }
    }

    static bool bare_key_char(char c)
    {
        return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
    }

    std::vector<std::string> key_path()
    {
        std::vector<std::string> parts;
        while (true) {
            skip_ws();
            if (peek() == '"') {
                parts.push_back(basic_string());
            } else if (peek() == '\'') {
                parts.push_back(literal_string());
            } else {
                std::string part;
                while (bare_key_char(peek())) {
                    part += take();
                }
                if (part.empty()) {
                    fail("expected a key");
                }
                parts.push_back(std::move(part));
            }
            skip_ws();
            if (peek() != '.') {
                return parts;
            }
            take();
        }
    }

    std::string joined(const std::vector<std::string>& path) const
    {
        std::string out;
        for (const auto& p : path) {
            out += (out.empty() ? "" : ".") + p;
        }
        return out;
    }

    /// Walks `path` from `node`, creating tables; steps into the last element of arrays of tables.
    json* descend(json* node, const std::vector<std::string>& path, std::size_t count)
    {
        for (std::size_t i = 0; i < count; ++i) {
            auto& child = (*node)[path[i]];
            if (child.is_null()) {
                child = json::object();
            }
            if (child.is_array() && !child.empty() && child.back().is_object()) {
                node = &child.back();
            } else if (child.is_object()) {
                node = &child;
            } else {
                fail(fmt::format("key '{}' is not a table", joined(path)));
            }
        }
        return node;
    }

    json* header(json& root)
    {
        take();
        const bool array_of_tables = peek() == '[';
        if (array_of_tables) {
            take();
        }
        const auto path = key_path();
        expect(']');
        if (array_of_tables) {
            expect(']');
        }
        json* parent = descend(&root, path, path.size() - 1);
        auto& slot = (*parent)[path.back()];
        if (array_of_tables) {
            if (slot.is_null()) {
                slot = json::array();
            }
            if (!slot.is_array()) {
                fail(fmt::format("'{}' is already defined as a table", joined(path)));
            }
            slot.push_back(json::object());
            return &slot.back();
        }
        if (slot.is_null()) {
            slot = json::object();
        } else if (!slot.is_object()) {
            fail(fmt::format("'{}' is already defined", joined(path)));
        } else if (defined_tables_.count(joined(path)) != 0) {
            fail(fmt::format("table '{}' defined twice", joined(path)));
        }
        defined_tables_.insert(joined(path));
        return &slot;
    }

    void key_value(json& table)
    {
        const auto path = key_path();
        skip_ws();
        expect('=');
        skip_ws();
        json* parent = descend(&table, path, path.size() - 1);
        if (parent->contains(path.back())) {
            fail(fmt::format("duplicate key '{}'", joined(path)));
        }
        (*parent)[path.back()] = value();
    }

    json value()
    {
        const char c = peek();
        if (starts_with("\"\"\"")) {
            return multiline_basic();
        }
        if (starts_with("'''")) {
            return multiline_literal();
        }
        if (c == '"') {
            return basic_string();
        }
        if (c == '\'') {
            return literal_string();
        }
        if (c == '[') {
            return array();
        }
        if (c == '{') {
            return inline_table();
        }
        if (starts_with("true")) {
            pos_ += 4;
            return true;
        }
        if (starts_with("false")) {
            pos_ += 5;
            return false;
        }
        return number();
    }

    void append_utf8(std::string& out, std::uint32_t cp)
    {
        if (cp < 0x80) {
            out += static_cast<char>(cp);
        } else if (cp < 0x800) {
            out += static_cast<char>(0xC0 | (cp >> 6));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else if (cp < 0x10000) {
            out += static_cast<char>(0xE0 | (cp >> 12));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else if (cp < 0x110000) {
            out += static_cast<char>(0xF0 | (cp >> 18));
            out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else {
            fail("invalid unicode escape");
        }
    }

    void escape(std::string& out)
    {
        take();  // backslash
        const char e = eof() ? '\0' : take();
        switch (e) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        case 'b': out += '\b'; break;
        case 'f': out += '\f'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'u':
        case 'U': {
            const std::size_t digits = e == 'u' ? 4 : 8;
            if (pos_ + digits > s_.size()) {
                fail("truncated unicode escape");
            }
            std::uint32_t cp = 0;
            auto [ptr, ec] = std::from_chars(s_.data() + pos_, s_.data() + pos_ + digits, cp, 16);
            if (ec != std::errc{} || ptr != s_.data() + pos_ + digits) {
                fail("invalid unicode escape");
            }
            pos_ += digits;
            append_utf8(out, cp);
            break;
        }
        default: fail(fmt::format("invalid escape '\\{}'", e));
        }
    }

    std::string basic_string()
    {
        take();
        std::string out;
        while (true) {
            if (eof() || peek() == '\n') {
                fail("unterminated string");
            }
            if (peek() == '"') {
                take();
                return out;
            }
            if (peek() == '\\') {
                escape(out);
            } else {
                out += take();
            }
        }
    }

    std::string literal_string()
    {
        take();
        std::string out;
        while (true) {
            if (eof() || peek() == '\n') {
                fail("unterminated string");
            }
            if (peek() == '\'') {
                take();
                return out;
            }
            out += take();
        }
    }

    void skip_leading_newline()
    {
        if (peek() == '\r' && peek(1) == '\n') {
            take();
        }
        if (peek() == '\n') {
            take();
        }
    }

    std::string multiline_basic()
    {
        pos_ += 3;
        skip_leading_newline();
        std::string out;
        while (true) {
            if (eof()) {
                fail("unterminated multi-line string");
            }
            if (starts_with("\"\"\"")) {
                pos_ += 3;
                return out;
            }
            if (peek() == '\\') {
                // Line-ending backslash trims the newline and following whitespace.
                std::size_t ahead = 1;
                while (peek(ahead) == ' ' || peek(ahead) == '\t' || peek(ahead) == '\r') {
                    ++ahead;
                }
                if (peek(ahead) == '\n') {
                    take();
                    while (peek() == ' ' || peek() == '\t' || peek() == '\r' || peek() == '\n') {
                        take();
                    }
                    continue;
                }
                escape(out);
            } else {
                out += take();
            }
        }
    }

    std::string multiline_literal()
    {
        pos_ += 3;
        skip_leading_newline();
        std::string out;
        while (true) {
            if (eof()) {
                fail("unterminated multi-line string");
            }
            if (starts_with("'''")) {
                pos_ += 3;
                return out;
            }
            out += take();
        }
    }

    json array()
    {
        take();
        json out = json::array();
        while (true) {
            skip_ws_lines();
            if (peek() == ']') {
                take();
                return out;
            }
            out.push_back(value());
            skip_ws_lines();
            if (peek() == ',') {
                take();
            } else if (peek() != ']') {
                fail("expected ',' or ']' in array");
            }
        }
    }

    json inline_table()
    {
        take();
        json out = json::object();
        skip_ws();
        if (peek() == '}') {
            take();
            return out;
        }
        while (true) {
            key_value(out);
            skip_ws();
            if (peek() == '}') {
                take();
                return out;
            }
            expect(',');
        }
    }

    json number()
    {
        std::string token;
        while (!eof()) {
            const char c = peek();
            if ((c >= '0' && c <= '9') || c == '+' || c == '-' || c == '.' || c == 'e' || c == 'E' || c == '_') {
                token += c == '_' ? '\0' : c;
                take();
            } else {
                break;
            }
        }
        std::erase(token, '\0');
        if (token.empty()) {
            fail("expected a value");
        }
        std::string_view body = token;
        if (body.front() == '+') {
            body.remove_prefix(1);
        }
        const bool is_float = token.find_first_of(".eE") != std::string::npos;
        if (is_float) {
            double v = 0;
            auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
            if (ec != std::errc{} || ptr != body.data() + body.size()) {
                fail("invalid number");  // the token is not echoed; it may be a secret
            }
            return v;
        }
        std::int64_t v = 0;
        auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
        if (ec != std::errc{} || ptr != body.data() + body.size()) {
            fail("invalid value (strings must be quoted)");
        }
        return v;
    }

    std::string_view s_;
    std::string source_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::set<std::string> defined_tables_;
};

}  // namespace

json parse(std::string_view text, std::string_view source)
{
    return Parser(text, source).document();
}

json parse_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::config, "cannot open config file " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.string());
}

}  // namespace iotllm::toml
