#include "mathsearch/textindex.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/translit.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

namespace mathsearch {

namespace {

std::u32string nfc_code_points(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalizer unavailable");
  icu::UnicodeString src =
      icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  icu::UnicodeString normalized = nfc->normalize(src, status);
  if (U_FAILURE(status)) throw std::runtime_error("NFC normalization failed");

  std::u32string out;
  out.reserve(static_cast<std::size_t>(normalized.length()));
  for (int32_t i = 0; i < normalized.length();) {
    UChar32 c = normalized.char32At(i);
    out.push_back(static_cast<char32_t>(c));
    i += U16_LENGTH(c);
  }
  return out;
}

std::string utf8_of(std::u32string_view cps) {
  icu::UnicodeString u = icu::UnicodeString::fromUTF32(reinterpret_cast<const UChar32*>(cps.data()),
                                                       static_cast<int32_t>(cps.size()));
  std::string out;
  u.toUTF8String(out);
  return out;
}

bool is_word_char(char32_t c) { return u_isalpha(static_cast<UChar32>(c)) || u_isdigit(static_cast<UChar32>(c)); }

bool is_mark(char32_t c) {
  auto type = u_charType(static_cast<UChar32>(c));
  return type == U_NON_SPACING_MARK || type == U_COMBINING_SPACING_MARK || type == U_ENCLOSING_MARK;
}

// Calls f(begin, end) for every maximal word; combining marks stay attached.
template <typename F>
void for_each_word(std::u32string_view cps, F&& f) {
  std::size_t i = 0;
  while (i < cps.size()) {
    if (!is_word_char(cps[i])) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < cps.size() && (is_word_char(cps[j]) || is_mark(cps[j]))) ++j;
    f(i, j);
    i = j;
  }
}

const icu::Transliterator& ascii_folder() {
  thread_local std::unique_ptr<icu::Transliterator> folder = [] {
    UErrorCode status = U_ZERO_ERROR;
    std::unique_ptr<icu::Transliterator> t(icu::Transliterator::createInstance(
        "NFD; [:Nonspacing Mark:] Remove; NFC; Latin-ASCII", UTRANS_FORWARD, status));
    if (U_FAILURE(status) || !t) throw std::runtime_error("ICU ASCII folding transliterator unavailable");
    return t;
  }();
  return *folder;
}

void word_tokens(std::u32string_view word, std::vector<std::string>& out) {
  icu::UnicodeString u = icu::UnicodeString::fromUTF32(reinterpret_cast<const UChar32*>(word.data()),
                                                       static_cast<int32_t>(word.size()));
  u.toLower(icu::Locale::getRoot());
  std::string lowered;
  u.toUTF8String(lowered);
  const bool ascii = std::all_of(lowered.begin(), lowered.end(),
                                 [](char c) { return static_cast<unsigned char>(c) < 0x80; });
  out.push_back(lowered);
  if (ascii) return;
  ascii_folder().transliterate(u);
  std::string folded;
  u.toUTF8String(folded);
  if (folded != lowered) out.push_back(std::move(folded));
}

}  // namespace

std::string normalize_nfc(std::string_view text) { return utf8_of(nfc_code_points(text)); }

std::vector<std::string> tokenize(std::string_view text) {
  const std::u32string cps = nfc_code_points(text);
  std::vector<std::string> out;
  for_each_word(cps, [&](std::size_t b, std::size_t e) {
    word_tokens(std::u32string_view(cps).substr(b, e - b), out);
  });
  return out;
}

std::string snippet_around(std::string_view text, const std::vector<std::string>& query_tokens,
                           std::size_t width) {
  const std::u32string cps = nfc_code_points(text);
  std::optional<std::size_t> hit;
  std::vector<std::string> toks;
  for_each_word(cps, [&](std::size_t b, std::size_t e) {
    if (hit) return;
    toks.clear();
    word_tokens(std::u32string_view(cps).substr(b, e - b), toks);
    for (const std::string& t : toks) {
      if (std::find(query_tokens.begin(), query_tokens.end(), t) != query_tokens.end()) {
        hit = b;
        return;
      }
    }
  });
  if (!hit) return {};
  std::size_t start = *hit > width / 2 ? *hit - width / 2 : 0;
  if (cps.size() > width) start = std::min(start, cps.size() - width);
  else start = 0;
  return utf8_of(std::u32string_view(cps).substr(start, width));
}

void TextIndex::add_document(const std::string& doc_id, std::string_view text) {
  if (ordinal_.count(doc_id)) throw std::invalid_argument("duplicate document id '" + doc_id + "'");
  const auto doc = static_cast<std::uint32_t>(doc_ids_.size());
  ordinal_.emplace(doc_id, doc);
  doc_ids_.push_back(doc_id);

  std::map<std::string, std::uint32_t> tf;
  std::uint32_t length = 0;
  for (std::string& tok : tokenize(text)) {
    ++tf[std::move(tok)];
    ++length;
  }
  lengths_.push_back(length);
  total_length_ += length;
  for (auto& [term, count] : tf) postings_[term].push_back(Posting{doc, count});
}

double TextIndex::average_length() const {
  if (doc_ids_.empty()) return 0.0;
  return static_cast<double>(total_length_) / static_cast<double>(doc_ids_.size());
}

const std::vector<Posting>* TextIndex::postings(const std::string& term) const {
  auto it = postings_.find(term);
  return it == postings_.end() ? nullptr : &it->second;
}

std::vector<TextHit> TextIndex::search(std::string_view query, std::size_t limit) const {
  std::vector<std::string> terms;
  for (std::string& t : tokenize(query)) {
    if (std::find(terms.begin(), terms.end(), t) == terms.end()) terms.push_back(std::move(t));
  }
  const double n = static_cast<double>(doc_ids_.size());
  const double avgdl = average_length();
  std::vector<double> scores(doc_ids_.size(), 0.0);
  std::vector<bool> touched(doc_ids_.size(), false);
  for (const std::string& term : terms) {
    const auto* plist = postings(term);
    if (!plist) continue;
    const double df = static_cast<double>(plist->size());
    const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
    for (const Posting& p : *plist) {
      const double tf = p.tf;
      const double norm = kK1 * (1.0 - kB + kB * lengths_[p.doc] / avgdl);
      scores[p.doc] += idf * tf * (kK1 + 1.0) / (tf + norm);
      touched[p.doc] = true;
    }
  }
  std::vector<TextHit> hits;
  for (std::uint32_t d = 0; d < doc_ids_.size(); ++d) {
    if (touched[d]) hits.push_back(TextHit{doc_ids_[d], scores[d]});
  }
  std::sort(hits.begin(), hits.end(), [](const TextHit& a, const TextHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
  });
  if (hits.size() > limit) hits.resize(limit);
  return hits;
}

Json TextIndex::to_json() const {
  Json docs = Json::array();
  for (std::size_t d = 0; d < doc_ids_.size(); ++d) {
    Json entry = Json::object();
    entry["id"] = doc_ids_[d];
    entry["length"] = lengths_[d];
    docs.push_back(std::move(entry));
  }
  Json terms = Json::array();
  for (const auto& [term, plist] : postings_) {
    Json ps = Json::array();
    for (const Posting& p : plist) ps.push_back(Json::array({p.doc, p.tf}));
    terms.push_back(Json::array({term, std::move(ps)}));
  }
  Json j = Json::object();
  j["format"] = "textindex/1";
  j["k1"] = kK1;
  j["b"] = kB;
  j["docs"] = std::move(docs);
  j["terms"] = std::move(terms);
  return j;
}

TextIndex TextIndex::from_json(const Json& j) {
  try {
    if (j.at("format").get<std::string>() != "textindex/1") {
      throw std::invalid_argument("unsupported textindex format");
    }
    if (j.at("k1").get<double>() != kK1 || j.at("b").get<double>() != kB) {
      throw std::invalid_argument("textindex built with different BM25 constants");
    }
    TextIndex index;
    for (const Json& d : j.at("docs")) {
      const auto id = d.at("id").get<std::string>();
      if (index.ordinal_.count(id)) throw std::invalid_argument("duplicate document id '" + id + "'");
      index.ordinal_.emplace(id, static_cast<std::uint32_t>(index.doc_ids_.size()));
      index.doc_ids_.push_back(id);
      index.lengths_.push_back(d.at("length").get<std::uint32_t>());
      index.total_length_ += index.lengths_.back();
    }
    for (const Json& t : j.at("terms")) {
      std::vector<Posting> plist;
      for (const Json& p : t.at(1)) {
        Posting post{p.at(0).get<std::uint32_t>(), p.at(1).get<std::uint32_t>()};
        if (post.doc >= index.doc_ids_.size() || post.tf == 0 ||
            (!plist.empty() && plist.back().doc >= post.doc)) {
          throw std::invalid_argument("invalid posting list");
        }
        plist.push_back(post);
      }
      index.postings_.emplace(t.at(0).get<std::string>(), std::move(plist));
    }
    return index;
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("malformed textindex: ") + e.what());
  }
}

}  // namespace mathsearch
