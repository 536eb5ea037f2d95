#include "arunet/render.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace arunet {

namespace {

struct Rgb {
  int r, g, b;
};

Rgb prob_color(double p) {
  p = std::min(1.0, std::max(0.0, p));
  return {static_cast<int>(std::lround(255.0 * p)), 0,
          static_cast<int>(std::lround(255.0 * (1.0 - p)))};
}

// Length of the UTF-8 character starting at position i, or 0 if invalid.
size_t utf8_char_len(const std::string& s, size_t i) {
  unsigned char c = static_cast<unsigned char>(s[i]);
  size_t len;
  if (c < 0x80) len = 1;
  else if ((c & 0xE0) == 0xC0) len = 2;
  else if ((c & 0xF0) == 0xE0) len = 3;
  else if ((c & 0xF8) == 0xF0) len = 4;
  else return 0;
  if (i + len > s.size()) return 0;
  for (size_t k = 1; k < len; ++k) {
    if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return 0;
  }
  return len;
}

std::string escape_byte(unsigned char c) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "\\x%02X", c);
  return buf;
}

std::string html_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

template <typename Emit>
void walk_chars(const std::string& text, const std::vector<double>& probs, Emit emit) {
  if (text.size() != probs.size()) {
    throw std::runtime_error("render: " + std::to_string(probs.size()) + " probabilities for " +
                             std::to_string(text.size()) + " bytes");
  }
  size_t i = 0;
  while (i < text.size()) {
    size_t len = utf8_char_len(text, i);
    if (len == 0) {
      emit(escape_byte(static_cast<unsigned char>(text[i])), probs[i], /*escaped=*/true);
      ++i;
    } else {
      // Multi-byte characters take the probability of their last byte.
      emit(text.substr(i, len), probs[i + len - 1], /*escaped=*/false);
      i += len;
    }
  }
}

}  // namespace

std::string render_ansi(const std::string& text, const std::vector<double>& probs) {
  std::string out;
  walk_chars(text, probs, [&](const std::string& ch, double p, bool) {
    Rgb c = prob_color(p);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "\x1b[38;2;%d;%d;%dm", c.r, c.g, c.b);
    out += buf;
    out += ch;
  });
  out += "\x1b[0m";
  return out;
}

std::string render_html(const std::string& text, const std::vector<double>& probs) {
  std::string body;
  walk_chars(text, probs, [&](const std::string& ch, double p, bool escaped) {
    Rgb c = prob_color(p);
    char buf[48];
    std::snprintf(buf, sizeof(buf), "<span style=\"color:#%02X%02X%02X\">", c.r, c.g, c.b);
    body += buf;
    body += escaped ? ch : html_escape(ch);
    body += "</span>";
  });
  return "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">"
         "<style>body{background:#111}pre{font-size:14px}</style></head>\n"
         "<body><pre>" + body + "</pre></body></html>\n";
}

std::string strip_ansi(const std::string& rendered) {
  std::string out;
  size_t i = 0;
  while (i < rendered.size()) {
    if (rendered[i] == '\x1b' && i + 1 < rendered.size() && rendered[i + 1] == '[') {
      size_t j = i + 2;
      while (j < rendered.size() && rendered[j] != 'm') ++j;
      i = j + 1;
    } else {
      out += rendered[i++];
    }
  }
  return out;
}

}  // namespace arunet
