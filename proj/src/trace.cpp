#include "vqla/trace.hpp"

#include <array>
#include <cctype>
#include <charconv>

namespace vqla {

std::string normalize_answer(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  bool in_space = false;
  for (char c : text) {
    const bool ws = (c == ' ' || c == '\t' || c == '\n' || c == '\r');
    if (ws) {
      in_space = !out.empty();
      continue;
    }
    if (in_space) out.push_back(' ');
    in_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  while (!out.empty()) {
    const char c = out.back();
    if (c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?') {
      out.pop_back();
      while (!out.empty() && out.back() == ' ') out.pop_back();
    } else {
      break;
    }
  }
  return out;
}

namespace {

struct Word {
  std::string text;
  bool joined_to_next = false;  // separated only by spaces/hyphens
};

std::vector<Word> tokenize_words(const std::string& text) {
  std::vector<Word> words;
  std::string current;
  bool clean_gap = true;  // no punctuation seen since the last word
  for (char raw : text) {
    const auto c = static_cast<unsigned char>(raw);
    if (std::isalpha(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
      continue;
    }
    if (!current.empty()) {
      words.push_back({current, false});
      current.clear();
      clean_gap = true;
    }
    if (raw != ' ' && raw != '-' && raw != '\t') {
      clean_gap = false;
    }
    if (!words.empty()) {
      words.back().joined_to_next = clean_gap;
    }
  }
  if (!current.empty()) words.push_back({current, false});
  return words;
}

std::optional<Quadrant> quadrant_from_words(const std::string& a, const std::string& b) {
  const bool a_h = (a == "left" || a == "right");
  const bool a_v = (a == "top" || a == "bottom");
  const bool b_h = (b == "left" || b == "right");
  const bool b_v = (b == "top" || b == "bottom");
  std::string h, v;
  if (a_h && b_v) {
    h = a;
    v = b;
  } else if (a_v && b_h) {
    h = b;
    v = a;
  } else {
    return std::nullopt;
  }
  if (h == "left") return (v == "top") ? Quadrant::LT : Quadrant::LB;
  return (v == "top") ? Quadrant::RT : Quadrant::RB;
}

struct MarkerSpan {
  std::size_t begin = std::string::npos;
  std::size_t end = std::string::npos;
  std::string payload;
  bool found() const { return begin != std::string::npos; }
};

MarkerSpan find_marker(const std::string& text, const std::string& open,
                       const std::string& close) {
  MarkerSpan span;
  const std::size_t start = text.find(open);
  if (start == std::string::npos) return span;
  const std::size_t payload_begin = start + open.size();
  const std::size_t stop = text.find(close, payload_begin);
  if (stop == std::string::npos) return span;
  span.begin = start;
  span.end = stop + close.size();
  span.payload = text.substr(payload_begin, stop - payload_begin);
  return span;
}

std::optional<BoundingBox> parse_box_payload(const std::string& payload) {
  std::array<int, 4> vals{};
  std::size_t n = 0;
  std::size_t i = 0;
  while (i < payload.size()) {
    const char c = payload[i];
    if (c == '[' || c == ']' || c == ',' || c == ' ') {
      ++i;
      continue;
    }
    if (n == 4) return std::nullopt;  // too many coordinates
    int value = 0;
    const char* begin = payload.data() + i;
    const char* end = payload.data() + payload.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr == begin) return std::nullopt;
    vals[n++] = value;
    i = static_cast<std::size_t>(ptr - payload.data());
  }
  if (n != 4) return std::nullopt;
  BoundingBox box{vals[0], vals[1], vals[2], vals[3]};
  if (!box.valid()) return std::nullopt;
  return box;
}

std::optional<CoTChain> parse_stage_lines(const std::string& text) {
  struct Prefix {
    const char* name;
    StageLabel label;
  };
  static const Prefix kPrefixes[] = {
      {"planning", StageLabel::Planning},
      {"principle", StageLabel::Principle},
      {"visual analysis", StageLabel::VisualAnalysis},
      {"comparison", StageLabel::Comparison},
      {"contact analysis", StageLabel::ContactAnalysis},
      {"conclusion", StageLabel::Conclusion},
  };

  CoTChain chain;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    const std::string line =
        text.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
    std::string lowered;
    lowered.reserve(line.size());
    for (char c : line) {
      lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    bool matched = false;
    for (const Prefix& p : kPrefixes) {
      const std::size_t len = std::string(p.name).size();
      if (lowered.rfind(p.name, 0) == 0 && lowered.size() > len && lowered[len] == ':') {
        std::string body = line.substr(len + 1);
        while (!body.empty() && body.front() == ' ') body.erase(body.begin());
        chain.stages.push_back({p.label, body});
        matched = true;
        break;
      }
    }
    if (!matched && !chain.stages.empty() && !line.empty()) {
      // continuation line of the previous stage
      chain.stages.back().text += "\n" + line;
    }
    if (eol == std::string::npos) break;
    pos = eol + 1;
  }
  if (chain.stages.empty()) return std::nullopt;
  return chain;
}

}  // namespace

std::vector<Quadrant> extract_spatial_terms(const std::string& text) {
  std::vector<Quadrant> mentions;
  const std::vector<Word> words = tokenize_words(text);
  for (std::size_t i = 0; i + 1 < words.size(); ++i) {
    if (!words[i].joined_to_next) continue;
    if (auto q = quadrant_from_words(words[i].text, words[i + 1].text)) {
      mentions.push_back(*q);
      ++i;  // consume the pair
    }
  }
  return mentions;
}

ParsedTrace parse_trace(const std::string& text) {
  ParsedTrace trace;

  const MarkerSpan answer_span = find_marker(text, "<answer>", "</answer>");
  const MarkerSpan box_span = find_marker(text, "<box>", "</box>");

  if (answer_span.found()) {
    trace.answer = normalize_answer(answer_span.payload);
  }
  if (box_span.found()) {
    trace.bbox = parse_box_payload(box_span.payload);
  }

  // Reasoning text = input minus marker spans, so the final-answer payload
  // does not masquerade as a spatial claim of the reasoning.
  std::string reasoning;
  reasoning.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    if (answer_span.found() && i == answer_span.begin) {
      i = answer_span.end;
      continue;
    }
    if (box_span.found() && i == box_span.begin) {
      i = box_span.end;
      continue;
    }
    reasoning.push_back(text[i]);
    ++i;
  }
  trace.reasoning_text = reasoning;

  trace.stages = parse_stage_lines(reasoning);
  trace.spatial_mentions = extract_spatial_terms(reasoning);

  std::vector<Quadrant> conclusion_mentions;
  if (trace.stages) {
    for (const CoTStage& stage : trace.stages->stages) {
      if (stage.label == StageLabel::Conclusion) {
        const auto terms = extract_spatial_terms(stage.text);
        conclusion_mentions.insert(conclusion_mentions.end(), terms.begin(), terms.end());
      }
    }
  }
  // Staged traces whose conclusion makes no spatial claim keep q_inferred
  // absent: the coherence reward has nothing to check against.
  if (!conclusion_mentions.empty()) {
    trace.q_inferred = conclusion_mentions.back();
  } else if (!trace.stages && !trace.spatial_mentions.empty()) {
    trace.q_inferred = trace.spatial_mentions.back();
  }
  return trace;
}

}  // namespace vqla
