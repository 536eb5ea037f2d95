#pragma once

#include <string>
#include <vector>

namespace arunet {

// Per-character boundary-probability rendering: probability 1 is pure red,
// probability 0 pure blue. probs has one entry per byte of text; a multi-byte
// UTF-8 character is colored by its final byte's probability. Invalid UTF-8
// bytes are rendered escaped (\xNN) instead of raw.
std::string render_ansi(const std::string& text, const std::vector<double>& probs);
std::string render_html(const std::string& text, const std::vector<double>& probs);

// Removes ANSI SGR escape sequences; inverse of render_ansi on valid UTF-8.
std::string strip_ansi(const std::string& rendered);

}  // namespace arunet
