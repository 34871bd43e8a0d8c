#pragma once

#include <charconv>
#include <string>

namespace oracle {

/// Half-away-from-zero rounding of the shortest round-trip decimal of `v`,
/// worked out on the scientific-notation digit string.
inline std::string round_decimal(double v, int places)
{
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific);
    std::string sci(buf, end);
    const bool negative = sci[0] == '-';
    if (negative) {
        sci.erase(0, 1);
    }
    const auto e_pos = sci.find('e');
    const int exponent = std::stoi(sci.substr(e_pos + 1));
    std::string digits;
    for (char c : sci.substr(0, e_pos)) {
        if (c != '.') {
            digits += c;
        }
    }
    // value = 0.digits * 10^(exponent + 1); the decimal point sits after `point` digits.
    int point = exponent + 1;
    if (point <= 0) {
        digits.insert(0, static_cast<std::size_t>(-point) + 1, '0');
        point = 1;
    }
    const std::size_t keep = static_cast<std::size_t>(point + places);
    if (digits.size() < keep + 1) {
        digits.append(keep + 1 - digits.size(), '0');
    }
    const bool up = digits[keep] >= '5';
    std::string kept = digits.substr(0, keep);
    if (up) {
        int i = static_cast<int>(kept.size()) - 1;
        for (; i >= 0; --i) {
            if (kept[static_cast<std::size_t>(i)] == '9') {
                kept[static_cast<std::size_t>(i)] = '0';
            } else {
                ++kept[static_cast<std::size_t>(i)];
                break;
            }
        }
        if (i < 0) {
            kept.insert(kept.begin(), '1');
            ++point;
        }
    }
    std::string int_part = kept.substr(0, static_cast<std::size_t>(point));
    std::string frac_part = kept.substr(static_cast<std::size_t>(point));
    while (int_part.size() > 1 && int_part[0] == '0') {
        int_part.erase(0, 1);
    }
    if (int_part.empty()) {
        int_part = "0";
    }
    std::string out = int_part;
    if (places > 0) {
        out += "." + frac_part;
    }
    bool zero = true;
    for (char c : out) {
        zero = zero && (c == '0' || c == '.');
    }
    return (negative && !zero ? "-" : "") + out;
}

}  // namespace oracle
