#pragma once

// Source acquisition and text preparation: fetch (file or HTTP), HTML to
// plain text, sentence segmentation, and chunking to a token budget.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "skg/error.hpp"
#include "skg/http.hpp"
#include "skg/util.hpp"

namespace skg {

struct Document {
  std::string id;
  std::string source_uri;
  std::string title;
  std::string body;  // cleaned UTF-8 plain text
  std::chrono::system_clock::time_point fetched_at;
};

struct Chunk {
  std::string document_id;
  size_t index = 0;
  std::string text;
  size_t approx_tokens = 0;
};

// Token estimate: whitespace-delimited words x 1.35, rounded up.
inline size_t approx_tokens(std::string_view text) {
  return (word_count(text) * 135 + 99) / 100;
}

namespace detail {

inline bool ieq(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (ascii_lower(a[i]) != ascii_lower(b[i])) return false;
  return true;
}

// Strips an element and its contents, case-insensitively: <script ...>...</script>
inline void strip_element(std::string& html, std::string_view tag) {
  std::string open = "<" + std::string(tag);
  std::string close = "</" + std::string(tag);
  std::string lower = to_lower(html);
  std::string out;
  size_t pos = 0;
  while (pos < html.size()) {
    size_t start = lower.find(open, pos);
    if (start == std::string::npos) {
      out.append(html, pos, html.size() - pos);
      break;
    }
    out.append(html, pos, start - pos);
    size_t end = lower.find(close, start);
    if (end == std::string::npos) {
      pos = html.size();
      break;
    }
    size_t gt = lower.find('>', end);
    pos = (gt == std::string::npos) ? html.size() : gt + 1;
  }
  html = std::move(out);
}

inline std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (size_t i = 0; i < s.size();) {
    if (s[i] != '&') {
      out.push_back(s[i++]);
      continue;
    }
    size_t semi = s.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) {
      out.push_back(s[i++]);
      continue;
    }
    std::string_view ent = s.substr(i + 1, semi - i - 1);
    if (ent == "amp") out.push_back('&');
    else if (ent == "lt") out.push_back('<');
    else if (ent == "gt") out.push_back('>');
    else if (ent == "quot") out.push_back('"');
    else if (ent == "apos") out.push_back('\'');
    else if (ent == "nbsp") out.push_back(' ');
    else if (!ent.empty() && ent[0] == '#') {
      long code = 0;
      try {
        code = (ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X'))
                   ? std::stol(std::string(ent.substr(2)), nullptr, 16)
                   : std::stol(std::string(ent.substr(1)));
      } catch (...) {
        out.push_back(s[i++]);
        continue;
      }
      if (code > 0 && code < 128) out.push_back(static_cast<char>(code));
      else out.push_back(' ');
    } else {
      out.push_back(s[i++]);
      continue;
    }
    i = semi + 1;
  }
  return out;
}

inline bool looks_like_html(std::string_view text) {
  std::string head = to_lower(std::string(text.substr(0, std::min<size_t>(text.size(), 512))));
  return head.find("<!doctype html") != std::string::npos || head.find("<html") != std::string::npos ||
         head.find("<body") != std::string::npos || head.find("<div") != std::string::npos ||
         head.find("<p>") != std::string::npos;
}

inline std::string extract_title(std::string_view html) {
  std::string lower = to_lower(std::string(html));
  size_t a = lower.find("<title");
  if (a == std::string::npos) return {};
  a = lower.find('>', a);
  if (a == std::string::npos) return {};
  size_t b = lower.find("</title", a);
  if (b == std::string::npos) return {};
  return collapse_ws(decode_entities(html.substr(a + 1, b - a - 1)));
}

}  // namespace detail

// HTML to plain text: scripts/styles removed with their contents, comments
// removed, remaining tags replaced by a space (table cells end up joined by
// single spaces), entities decoded, whitespace collapsed.
inline std::string clean_html(std::string_view html) {
  std::string work(html);
  detail::strip_element(work, "head");
  detail::strip_element(work, "script");
  detail::strip_element(work, "style");
  // comments
  {
    std::string out;
    size_t pos = 0;
    while (pos < work.size()) {
      size_t start = work.find("<!--", pos);
      if (start == std::string::npos) {
        out.append(work, pos, work.size() - pos);
        break;
      }
      out.append(work, pos, start - pos);
      size_t end = work.find("-->", start);
      pos = (end == std::string::npos) ? work.size() : end + 3;
    }
    work = std::move(out);
  }
  // tags -> space
  std::string text;
  text.reserve(work.size());
  bool in_tag = false;
  for (char c : work) {
    if (c == '<') {
      in_tag = true;
      text.push_back(' ');
    } else if (c == '>') {
      in_tag = false;
    } else if (!in_tag) {
      text.push_back(c);
    }
  }
  return collapse_ws(detail::decode_entities(text));
}

// Rule-based segmentation: a sentence ends at . ! ? followed by whitespace
// and an uppercase letter or digit, unless the token before a period is a
// known abbreviation or a single letter (initials, "e.g.").
inline std::vector<std::string> segment_sentences(std::string_view body) {
  static const std::set<std::string> kAbbrev = {
      "co",  "ltd", "inc", "corp", "mr", "mrs", "ms",  "dr",  "prof", "st",
      "no",  "vs",  "etc", "jr",   "sr", "mt",  "fig", "approx", "dept", "est",
  };
  std::vector<std::string> sentences;
  std::string text = collapse_ws(body);
  if (text.empty()) return sentences;

  size_t start = 0;
  for (size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;

    size_t end = i;
    while (end + 1 < text.size() &&
           (text[end + 1] == '.' || text[end + 1] == '!' || text[end + 1] == '?' ||
            text[end + 1] == '"' || text[end + 1] == '\'' || text[end + 1] == ')' ||
            text[end + 1] == ']'))
      ++end;

    if (end + 1 >= text.size()) break;  // terminator at end of text
    if (text[end + 1] != ' ') continue;

    size_t next = end + 2;
    if (next >= text.size()) break;
    if (!is_ascii_upper(text[next]) && !is_ascii_digit(text[next])) continue;

    if (c == '.') {
      size_t tok_end = i;
      size_t tok_start = tok_end;
      while (tok_start > 0 && is_ascii_alnum(text[tok_start - 1])) --tok_start;
      std::string token = to_lower(text.substr(tok_start, tok_end - tok_start));
      if (token.size() == 1 && is_ascii_alpha(token[0])) continue;  // initial
      if (kAbbrev.count(token)) continue;
    }

    sentences.push_back(trim(text.substr(start, end + 1 - start)));
    start = next;
    i = end;
  }
  std::string last = trim(text.substr(start));
  if (!last.empty()) sentences.push_back(last);
  return sentences;
}

// Greedy packing: each chunk takes the maximal run of consecutive sentences
// whose joined token estimate stays within budget.
inline std::vector<Chunk> chunk_document(const Document& doc, size_t budget) {
  std::vector<std::string> sentences = segment_sentences(doc.body);
  std::vector<Chunk> chunks;
  if (sentences.empty()) return chunks;

  size_t i = 0;
  while (i < sentences.size()) {
    size_t words = word_count(sentences[i]);
    if ((words * 135 + 99) / 100 > budget) {
      fail(Errc::SentenceExceedsBudget,
           "sentence exceeds chunk budget of " + std::to_string(budget) + " tokens: \"" +
               sentences[i].substr(0, 80) + "\"");
    }
    std::string text = sentences[i];
    size_t j = i + 1;
    while (j < sentences.size()) {
      size_t w = words + word_count(sentences[j]);
      if ((w * 135 + 99) / 100 > budget) break;
      words = w;
      text += " ";
      text += sentences[j];
      ++j;
    }
    Chunk c;
    c.document_id = doc.id;
    c.index = chunks.size();
    c.text = std::move(text);
    c.approx_tokens = (words * 135 + 99) / 100;
    chunks.push_back(std::move(c));
    i = j;
  }
  return chunks;
}

// Fetches one document from a file path/URI or an http(s) URL and cleans it
// to plain text.
inline Document fetch_document(const std::string& uri, std::chrono::milliseconds timeout =
                                                           std::chrono::milliseconds(10000)) {
  Document doc;
  doc.source_uri = uri;
  doc.fetched_at = std::chrono::system_clock::now();

  std::string raw;
  bool is_html = false;
  if (uri.rfind("http://", 0) == 0 || uri.rfind("https://", 0) == 0) {
    std::string content_type;
    raw = fetch_http_body(uri, timeout, &content_type);
    std::string ct = to_lower(content_type);
    if (!ct.empty() && ct.find("text/") == std::string::npos &&
        ct.find("xhtml") == std::string::npos && ct.find("xml") == std::string::npos &&
        ct.find("json") == std::string::npos) {
      fail(Errc::NonTextContent, "unsupported content type '" + content_type + "' from " + uri);
    }
    is_html = ct.find("html") != std::string::npos || detail::looks_like_html(raw);
  } else {
    std::string path = uri;
    if (path.rfind("file://", 0) == 0) path = path.substr(7);
    else if (path.rfind("file:", 0) == 0) path = path.substr(5);
    raw = read_file(path);
    std::string ext = to_lower(std::filesystem::path(path).extension().string());
    is_html = ext == ".html" || ext == ".htm" || detail::looks_like_html(raw);
    doc.id = std::filesystem::path(path).stem().string();
  }

  if (is_html) {
    doc.title = detail::extract_title(raw);
    doc.body = clean_html(raw);
  } else {
    doc.body = collapse_ws(raw);
  }
  if (doc.body.empty()) fail(Errc::EmptyAfterCleaning, "no text left after cleaning: " + uri);
  if (doc.id.empty()) doc.id = sha256_hex(uri).substr(0, 12);
  return doc;
}

struct ManifestEntry {
  std::string id;
  std::string uri;
  std::string title;
};

// Corpus manifest: JSON lines, one {id, uri, title?} object per document.
inline std::vector<ManifestEntry> load_manifest(const std::string& path) {
  std::vector<ManifestEntry> entries;
  std::istringstream in(read_file(path));
  std::string line;
  std::filesystem::path base = std::filesystem::path(path).parent_path();
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j.contains("uri")) {
      fail(Errc::MalformedConfig,
           "manifest line " + std::to_string(lineno) + " is not a {id, uri} object");
    }
    ManifestEntry e;
    e.id = j.at("id").get<std::string>();
    e.uri = j.at("uri").get<std::string>();
    e.title = j.value("title", std::string{});
    // relative file paths resolve against the manifest location
    if (e.uri.rfind("http://", 0) != 0 && e.uri.rfind("https://", 0) != 0) {
      std::string p = e.uri;
      if (p.rfind("file://", 0) == 0) p = p.substr(7);
      else if (p.rfind("file:", 0) == 0) p = p.substr(5);
      if (!std::filesystem::path(p).is_absolute()) p = (base / p).string();
      e.uri = p;
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

// A directory of .txt/.html files acts as an implicit manifest.
inline std::vector<ManifestEntry> implicit_manifest(const std::string& dir) {
  std::vector<ManifestEntry> entries;
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = to_lower(e.path().extension().string());
    if (ext == ".txt" || ext == ".html" || ext == ".htm") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) entries.push_back({f.stem().string(), f.string(), ""});
  return entries;
}

// Fetches every manifest entry with bounded parallelism; document order
// follows the manifest regardless of completion order.
inline std::vector<Document> load_corpus(const std::vector<ManifestEntry>& entries,
                                         size_t parallelism = 4,
                                         std::chrono::milliseconds timeout =
                                             std::chrono::milliseconds(10000)) {
  std::vector<Document> docs(entries.size());
  std::vector<std::exception_ptr> errors(entries.size());
  std::atomic<size_t> next{0};
  size_t workers = std::max<size_t>(1, std::min(parallelism, entries.size()));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (size_t i = next.fetch_add(1); i < entries.size(); i = next.fetch_add(1)) {
        try {
          Document d = fetch_document(entries[i].uri, timeout);
          d.id = entries[i].id;
          if (!entries[i].title.empty()) d.title = entries[i].title;
          docs[i] = std::move(d);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::set<std::string> ids;
  for (const auto& d : docs) {
    if (!ids.insert(d.id).second)
      fail(Errc::MalformedConfig, "duplicate document id in corpus: " + d.id);
  }
  return docs;
}

}  // namespace skg
