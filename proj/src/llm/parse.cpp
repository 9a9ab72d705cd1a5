#include "prism/llm/parse.hpp"

#include <cctype>
#include <optional>
#include <regex>

#include <nlohmann/json.hpp>

#include "prism/error.hpp"

namespace prism::llm {
namespace {

constexpr std::string_view kLeftDouble = "\xE2\x80\x9C";   // “
constexpr std::string_view kRightDouble = "\xE2\x80\x9D";  // ”
constexpr std::string_view kLeftSingle = "\xE2\x80\x98";   // ‘
constexpr std::string_view kRightSingle = "\xE2\x80\x99";  // ’

void append_utf8(std::string& out, unsigned cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

// Forgiving recursive-descent reader for the small JSON subset agents emit.
class Reader {
 public:
  Reader(std::string_view text, std::size_t pos) : text_(text), pos_(pos) {}

  std::size_t pos() const { return pos_; }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  std::optional<std::string> string() {
    skip_ws();
    if (starts_with(kLeftDouble)) return delimited(kLeftDouble.size(), kRightDouble);
    if (starts_with(kLeftSingle)) return delimited(kLeftSingle.size(), kRightSingle);
    if (pos_ >= text_.size()) return std::nullopt;
    const char quote = text_[pos_];
    if (quote != '"' && quote != '\'') return std::nullopt;
    std::size_t p = pos_ + 1;
    std::string out;
    while (p < text_.size()) {
      char c = text_[p];
      if (c == quote) {
        pos_ = p + 1;
        return out;
      }
      if (c == '\n') return std::nullopt;
      if (c == '\\' && p + 1 < text_.size()) {
        char e = text_[p + 1];
        p += 2;
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          case 'b': out += '\b'; break;
          case 'f': out += '\f'; break;
          case 'u': {
            auto cp = hex4(p);
            if (!cp) return std::nullopt;
            p += 4;
            if (*cp >= 0xD800 && *cp < 0xDC00 && p + 6 <= text_.size() && text_[p] == '\\' &&
                text_[p + 1] == 'u') {
              if (auto lo = hex4(p + 2); lo && *lo >= 0xDC00 && *lo < 0xE000) {
                *cp = 0x10000 + ((*cp - 0xD800) << 10) + (*lo - 0xDC00);
                p += 6;
              }
            }
            append_utf8(out, *cp);
            break;
          }
          default: out += e;
        }
        continue;
      }
      out += c;
      ++p;
    }
    return std::nullopt;
  }

  std::optional<std::size_t> index() {
    skip_ws();
    std::size_t save = pos_;
    char quote = 0;
    if (pos_ < text_.size() && (text_[pos_] == '"' || text_[pos_] == '\'')) quote = text_[pos_++];
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ == start || pos_ - start > 9) {
      pos_ = save;
      return std::nullopt;
    }
    std::size_t value = std::stoul(std::string(text_.substr(start, pos_ - start)));
    if (quote != 0) {
      if (pos_ >= text_.size() || text_[pos_] != quote) {
        pos_ = save;
        return std::nullopt;
      }
      ++pos_;
    }
    return value;
  }

  // [title, index] with optional trailing comma.
  std::optional<EvidenceRef> pair() {
    std::size_t save = pos_;
    auto fail = [&] {
      pos_ = save;
      return std::nullopt;
    };
    if (!eat('[')) return fail();
    auto title = string();
    if (!title || !eat(',')) return fail();
    auto idx = index();
    if (!idx) return fail();
    eat(',');
    if (!eat(']')) return fail();
    return EvidenceRef{std::move(*title), *idx};
  }

  template <class Item, class Fn>
  std::optional<std::vector<Item>> array_of(Fn item) {
    std::size_t save = pos_;
    std::vector<Item> out;
    if (!eat('[')) return std::nullopt;
    if (eat(']')) return out;
    while (true) {
      auto v = item();
      if (!v) break;
      out.push_back(std::move(*v));
      if (eat(']')) return out;
      if (!eat(',')) break;
      if (eat(']')) return out;  // trailing comma
    }
    pos_ = save;
    return std::nullopt;
  }

 private:
  bool starts_with(std::string_view s) const { return text_.substr(pos_).starts_with(s); }

  std::optional<std::string> delimited(std::size_t open_len, std::string_view close) {
    std::size_t start = pos_ + open_len;
    std::size_t end = text_.find(close, start);
    if (end == std::string_view::npos) return std::nullopt;
    std::string out(text_.substr(start, end - start));
    if (out.find('\n') != std::string::npos) return std::nullopt;
    pos_ = end + close.size();
    return out;
  }

  std::optional<unsigned> hex4(std::size_t p) const {
    if (p + 4 > text_.size()) return std::nullopt;
    unsigned v = 0;
    for (std::size_t i = p; i < p + 4; ++i) {
      char c = text_[i];
      v <<= 4;
      if (c >= '0' && c <= '9') v |= static_cast<unsigned>(c - '0');
      else if (c >= 'a' && c <= 'f') v |= static_cast<unsigned>(c - 'a' + 10);
      else if (c >= 'A' && c <= 'F') v |= static_cast<unsigned>(c - 'A' + 10);
      else return std::nullopt;
    }
    return v;
  }

  std::string_view text_;
  std::size_t pos_;
};

std::optional<std::vector<EvidenceRef>> ref_array_at(std::string_view text, std::size_t pos) {
  Reader r(text, pos);
  return r.array_of<EvidenceRef>([&] { return r.pair(); });
}

std::optional<std::vector<std::string>> string_array_at(std::string_view text, std::size_t pos) {
  Reader r(text, pos);
  return r.array_of<std::string>([&] { return r.string(); });
}

bool has_nested_array_attempt(std::string_view text) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '[') continue;
    Reader r(text, i + 1);
    if (r.peek('[')) return true;
  }
  return false;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string strip_numbering(std::string_view item) {
  static const std::regex prefix(R"(^\s*(?:\(?\d+[.):]|[-*])\s*)");
  return trim(std::regex_replace(std::string(item), prefix, "", std::regex_constants::format_first_only));
}

std::vector<std::string> clean_items(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  for (const auto& s : raw) {
    auto t = strip_numbering(s);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

std::vector<EvidenceRef> parse_ref_list(std::string_view reply) {
  for (std::size_t i = reply.find('['); i != std::string_view::npos; i = reply.find('[', i + 1)) {
    if (auto refs = ref_array_at(reply, i)) return std::move(*refs);
  }
  if (!has_nested_array_attempt(reply)) {
    // Bare pairs, e.g. `["A", 0], ["B", 1]`.
    for (std::size_t i = reply.find('['); i != std::string_view::npos;
         i = reply.find('[', i + 1)) {
      Reader r(reply, i);
      auto first = r.pair();
      if (!first) continue;
      std::vector<EvidenceRef> out{std::move(*first)};
      while (true) {
        r.eat(',');
        auto next = r.pair();
        if (!next) break;
        out.push_back(std::move(*next));
      }
      return out;
    }
  }
  throw ParseFailure("no [title, index] list found in reply");
}

std::optional<EvidenceRef> parse_ref_prefix(std::string_view line) {
  if (!line.starts_with('[')) return std::nullopt;
  Reader r(line, 0);
  return r.pair();
}

std::vector<std::string> parse_subquestions(std::string_view reply) {
  static const std::regex key(R"(sub[\s_-]?questions?)", std::regex::icase);
  const std::string text(reply);
  for (auto it = std::sregex_iterator(text.begin(), text.end(), key); it != std::sregex_iterator();
       ++it) {
    std::size_t p = static_cast<std::size_t>(it->position() + it->length());
    std::size_t colon = text.find(':', p);
    if (colon == std::string::npos || colon - p > 3) continue;
    std::size_t open = text.find('[', colon);
    if (open == std::string::npos) continue;
    if (trim(std::string_view(text).substr(colon + 1, open - colon - 1)).size() != 0) continue;
    if (auto items = string_array_at(text, open)) {
      auto cleaned = clean_items(*items);
      if (!cleaned.empty()) return cleaned;
    }
  }
  for (std::size_t i = text.find('['); i != std::string::npos; i = text.find('[', i + 1)) {
    if (auto items = string_array_at(text, i)) {
      auto cleaned = clean_items(*items);
      if (!cleaned.empty()) return cleaned;
    }
  }
  static const std::regex numbered(R"(^\s*(?:\(?\d+[.)]|[-*])\s+(.+)$)");
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    std::smatch m;
    if (std::regex_match(line, m, numbered)) lines.push_back(trim(m[1].str()));
    start = end + 1;
  }
  auto cleaned = clean_items(lines);
  if (!cleaned.empty()) return cleaned;
  throw ParseFailure("no sub-question list found in reply");
}

std::string json_quote(std::string_view text) {
  return nlohmann::json(std::string(text)).dump(-1, ' ', false,
                                                nlohmann::json::error_handler_t::replace);
}

std::string format_ref(const EvidenceRef& ref) {
  return "[" + json_quote(ref.title) + ", " + std::to_string(ref.sentence_index) + "]";
}

std::string format_ref_list(std::span<const EvidenceRef> refs) {
  std::string out = "[";
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (i > 0) out += ", ";
    out += format_ref(refs[i]);
  }
  out += "]";
  return out;
}

}  // namespace prism::llm
