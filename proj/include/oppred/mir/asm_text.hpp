#pragma once

#include <stdexcept>
#include <string>

#include "oppred/mir/ir.hpp"

namespace oppred::mir {

struct ParseError : std::runtime_error {
    int line;
    ParseError(int line_, const std::string& what)
        : std::runtime_error("line " + std::to_string(line_) + ": " + what), line(line_) {}
};

// Line-oriented assembly:
//   ; comment
//   program base 0x400000 entry main     (optional header)
//   fn main(2 args)
//   entry:
//     movimm r2, 0xd000
//     add r0, r1
//     cmp r0, 5
//     jcc ult L1 L2
//   L1:
//     ret r0
Program parse_asm(const std::string& text);

// Canonical, deterministic rendering; parse_asm(emit_asm(p)) is structurally
// equal to p.
std::string emit_asm(const Program& p);

} // namespace oppred::mir
