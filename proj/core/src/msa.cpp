#include "relate/msa.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <limits>
#include <sstream>

#include "relate/error.hpp"
#include "relate/parallel.hpp"

namespace relate {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Symbol counts of one alignment column.
struct Column {
  std::array<int, 128> counts{};
  int symbols = 0;
  int gaps = 0;
};

struct Profile {
  std::vector<std::size_t> members;  // input indices, row order
  std::vector<std::string> rows;
  std::size_t width() const { return rows.front().size(); }
};

std::vector<Column> columns_of(const std::vector<std::string>& rows) {
  std::vector<Column> cols(rows.front().size());
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (row[c] == kGap) {
        ++cols[c].gaps;
      } else {
        ++cols[c].counts[static_cast<unsigned char>(row[c]) & 0x7F];
        ++cols[c].symbols;
      }
    }
  return cols;
}

// Average pair score between two columns: symbol pairs score match or
// mismatch, symbol against an existing gap scores gap_extend, gap pairs 0.
double column_score(const Column& a, const Column& b, const AlignScoring& s) {
  double same = 0.0;
  for (std::size_t k = 0; k < 128; ++k) same += static_cast<double>(a.counts[k]) * b.counts[k];
  const double sym_pairs = static_cast<double>(a.symbols) * b.symbols;
  const double total = s.mismatch * sym_pairs + (s.match - s.mismatch) * same +
                       s.gap_extend * (static_cast<double>(a.symbols) * b.gaps +
                                       static_cast<double>(a.gaps) * b.symbols);
  return total / (static_cast<double>(a.symbols + a.gaps) * (b.symbols + b.gaps));
}

double gap_column_cost(const Column& c, const AlignScoring& s) {
  return s.gap_extend * static_cast<double>(c.symbols) / (c.symbols + c.gaps);
}

enum State : std::uint8_t { kDiag = 0, kUp = 1, kLeft = 2 };

// Pick the best of three candidates, preferring earlier ones on ties.
inline std::pair<double, std::uint8_t> best_of(double d, double u, double l) {
  std::pair<double, std::uint8_t> best{d, kDiag};
  if (u > best.first) best = {u, kUp};
  if (l > best.first) best = {l, kLeft};
  return best;
}

struct AlignPath {
  std::vector<std::uint8_t> moves;  // kDiag / kUp / kLeft, in forward order
  double score = 0.0;
};

// Three-state Gotoh alignment of two column lists.
AlignPath align_columns(const std::vector<Column>& a, const std::vector<Column>& b,
                        const AlignScoring& s) {
  const std::size_t n = a.size(), m = b.size();
  const double open_extra = s.gap_open - s.gap_extend;
  const std::size_t W = m + 1;
  std::vector<double> M((n + 1) * W, kNegInf), X((n + 1) * W, kNegInf), Y((n + 1) * W, kNegInf);
  std::vector<std::uint8_t> tM((n + 1) * W), tX((n + 1) * W), tY((n + 1) * W);
  std::vector<double> ga(n), gb(m);
  for (std::size_t i = 0; i < n; ++i) ga[i] = gap_column_cost(a[i], s);
  for (std::size_t j = 0; j < m; ++j) gb[j] = gap_column_cost(b[j], s);

  M[0] = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    const auto [v, t] = best_of(M[(i - 1) * W] + open_extra, X[(i - 1) * W], kNegInf);
    X[i * W] = v + ga[i - 1];
    tX[i * W] = t;
  }
  for (std::size_t j = 1; j <= m; ++j) {
    const auto [v, t] = best_of(M[j - 1] + open_extra, kNegInf, Y[j - 1]);
    Y[j] = v + gb[j - 1];
    tY[j] = t;
  }
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t here = i * W + j, diag = (i - 1) * W + j - 1, up = (i - 1) * W + j,
                        left = i * W + j - 1;
      {
        const auto [v, t] = best_of(M[diag], X[diag], Y[diag]);
        M[here] = v + column_score(a[i - 1], b[j - 1], s);
        tM[here] = t;
      }
      {
        const auto [v, t] = best_of(M[up] + open_extra, X[up], Y[up] + open_extra);
        X[here] = v + ga[i - 1];
        tX[here] = t;
      }
      {
        const auto [v, t] = best_of(M[left] + open_extra, X[left] + open_extra, Y[left]);
        Y[here] = v + gb[j - 1];
        tY[here] = t;
      }
    }
  }

  const std::size_t end = n * W + m;
  auto [score, state] = best_of(M[end], X[end], Y[end]);
  AlignPath path;
  path.score = score;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    const std::size_t here = i * W + j;
    path.moves.push_back(state);
    if (state == kDiag) {
      state = tM[here];
      --i;
      --j;
    } else if (state == kUp) {
      state = tX[here];
      --i;
    } else {
      state = tY[here];
      --j;
    }
  }
  std::reverse(path.moves.begin(), path.moves.end());
  return path;
}

Profile merge(const Profile& a, const Profile& b, const AlignScoring& s) {
  const AlignPath path = align_columns(columns_of(a.rows), columns_of(b.rows), s);
  Profile out;
  out.members = a.members;
  out.members.insert(out.members.end(), b.members.begin(), b.members.end());
  out.rows.assign(out.members.size(), std::string());
  for (auto& r : out.rows) r.reserve(path.moves.size());
  std::size_t i = 0, j = 0;
  for (const auto move : path.moves) {
    for (std::size_t r = 0; r < a.rows.size(); ++r) out.rows[r].push_back(move == kLeft ? kGap : a.rows[r][i]);
    for (std::size_t r = 0; r < b.rows.size(); ++r)
      out.rows[a.rows.size() + r].push_back(move == kUp ? kGap : b.rows[r][j]);
    if (move != kLeft) ++i;
    if (move != kUp) ++j;
  }
  return out;
}

void drop_all_gap_columns(std::vector<std::string>& rows) {
  if (rows.empty()) return;
  const std::size_t width = rows.front().size();
  std::vector<bool> keep(width, false);
  for (const auto& r : rows)
    for (std::size_t c = 0; c < width; ++c)
      if (r[c] != kGap) keep[c] = true;
  for (auto& r : rows) {
    std::string kept;
    for (std::size_t c = 0; c < width; ++c)
      if (keep[c]) kept.push_back(r[c]);
    r = std::move(kept);
  }
}

bool has_whitespace(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

PairwiseAlignment pairwise_align(const ClassSequence& a, const ClassSequence& b, const AlignScoring& scoring) {
  const auto cols = [](const ClassSequence& s) {
    std::vector<Column> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      out[i].counts[static_cast<unsigned char>(s[i]) & 0x7F] = 1;
      out[i].symbols = 1;
    }
    return out;
  };
  const AlignPath path = align_columns(cols(a), cols(b), scoring);
  PairwiseAlignment out;
  out.score = path.score;
  std::size_t i = 0, j = 0;
  for (const auto move : path.moves) {
    out.a.push_back(move == kLeft ? kGap : a[i]);
    out.b.push_back(move == kUp ? kGap : b[j]);
    if (move != kLeft) ++i;
    if (move != kUp) ++j;
  }
  return out;
}

std::optional<ConceptAlignment> progressive_align(const std::vector<ClassSequence>& seqs,
                                                  const AlignScoring& scoring, std::string meaning) {
  if (seqs.size() < 2) throw DomainError("progressive alignment needs at least two sequences");
  std::vector<std::size_t> present;
  for (std::size_t i = 0; i < seqs.size(); ++i)
    if (!seqs[i].empty()) present.push_back(i);
  if (present.empty()) return std::nullopt;

  // Average-linkage guide tree over normalised pairwise distances.
  const std::size_t k = present.size();
  std::vector<std::vector<double>> dist(k, std::vector<double>(k, 0.0));
  for (std::size_t x = 0; x < k; ++x)
    for (std::size_t y = x + 1; y < k; ++y) {
      const auto& sa = seqs[present[x]];
      const auto& sb = seqs[present[y]];
      const double best = scoring.match * static_cast<double>(std::max(sa.size(), sb.size()));
      const double score = pairwise_align(sa, sb, scoring).score;
      dist[x][y] = dist[y][x] = best > 0.0 ? 1.0 - score / best : 0.0;
    }

  std::vector<Profile> clusters;
  std::vector<std::size_t> sizes;
  for (std::size_t x = 0; x < k; ++x) {
    clusters.push_back({{present[x]}, {seqs[present[x]]}});
    sizes.push_back(1);
  }
  while (clusters.size() > 1) {
    std::size_t bi = 0, bj = 1;
    for (std::size_t x = 0; x < clusters.size(); ++x)
      for (std::size_t y = x + 1; y < clusters.size(); ++y)
        if (dist[x][y] < dist[bi][bj]) {
          bi = x;
          bj = y;
        }
    clusters[bi] = merge(clusters[bi], clusters[bj], scoring);
    for (std::size_t z = 0; z < clusters.size(); ++z) {
      if (z == bi || z == bj) continue;
      const double d = (sizes[bi] * dist[bi][z] + sizes[bj] * dist[bj][z]) / double(sizes[bi] + sizes[bj]);
      dist[bi][z] = dist[z][bi] = d;
    }
    sizes[bi] += sizes[bj];
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
    sizes.erase(sizes.begin() + static_cast<std::ptrdiff_t>(bj));
    dist.erase(dist.begin() + static_cast<std::ptrdiff_t>(bj));
    for (auto& row : dist) row.erase(row.begin() + static_cast<std::ptrdiff_t>(bj));
  }

  const Profile& root = clusters.front();
  ConceptAlignment out;
  out.meaning = std::move(meaning);
  out.rows.assign(seqs.size(), std::string(root.width(), kGap));
  for (std::size_t r = 0; r < root.members.size(); ++r) out.rows[root.members[r]] = root.rows[r];
  drop_all_gap_columns(out.rows);
  return out;
}

void CharacterMatrix::validate() const {
  if (taxa.size() != rows.size()) throw DomainError("matrix has " + std::to_string(taxa.size()) + " taxa but " +
                                                    std::to_string(rows.size()) + " rows");
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].size() != n_sites()) throw DomainError("matrix row for " + taxa[i] + " has a different width");
}

CharacterMatrix build_character_matrix(const Wordlist& wl, const ClassAlphabet& alphabet,
                                       const AlignScoring& scoring, unsigned threads) {
  const std::size_t m = wl.languages.size();
  const std::size_t n = wl.concepts.size();
  // encoded[concept][language]
  std::vector<std::vector<ClassSequence>> encoded(n, std::vector<ClassSequence>(m));
  std::vector<std::vector<bool>> filled(n, std::vector<bool>(m, false));
  std::vector<bool> language_has_data(m, false);
  for (const auto& e : wl.entries) {
    const std::size_t li = wl.language_index(e.language);
    const std::size_t ci = wl.concept_index(e.meaning);
    if (filled[ci][li])
      throw DomainError("slot (" + e.language + ", " + e.meaning + ") holds more than one form; select one first");
    filled[ci][li] = true;
    encoded[ci][li] = encode_entry(e, alphabet);
    if (!encoded[ci][li].empty()) language_has_data[li] = true;
  }
  if (std::count(language_has_data.begin(), language_has_data.end(), true) < 2)
    throw InsufficientDataError("fewer than two languages carry any consonant data");

  std::vector<std::optional<ConceptAlignment>> aligned(n);
  parallel_for(n, threads, [&](std::size_t c) { aligned[c] = progressive_align(encoded[c], scoring, wl.concepts[c]); });

  CharacterMatrix matrix;
  matrix.taxa = wl.languages;
  matrix.rows.assign(m, std::string());
  for (auto& block : aligned) {
    if (!block) continue;
    const std::size_t start = matrix.rows.front().size();
    for (std::size_t i = 0; i < m; ++i) matrix.rows[i] += block->rows[i];
    matrix.concept_bounds.push_back({block->meaning, start, start + block->width()});
  }
  if (matrix.n_sites() == 0) throw InsufficientDataError("no concept produced an alignment");
  return matrix;
}

void write_phylip(std::ostream& out, const CharacterMatrix& matrix) {
  matrix.validate();
  std::size_t pad = 0;
  for (const auto& t : matrix.taxa) {
    if (t.empty() || has_whitespace(t)) throw DomainError("taxon name '" + t + "' cannot be written in PHYLIP layout");
    pad = std::max(pad, t.size());
  }
  out << matrix.n_taxa() << ' ' << matrix.n_sites() << '\n';
  for (std::size_t i = 0; i < matrix.n_taxa(); ++i)
    out << matrix.taxa[i] << std::string(pad - matrix.taxa[i].size() + 2, ' ') << matrix.rows[i] << '\n';
}

void write_fasta(std::ostream& out, const CharacterMatrix& matrix) {
  matrix.validate();
  for (std::size_t i = 0; i < matrix.n_taxa(); ++i) out << '>' << matrix.taxa[i] << '\n' << matrix.rows[i] << '\n';
}

CharacterMatrix read_matrix(std::istream& in) {
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    lines.push_back(std::move(line));
  }
  if (lines.empty()) throw EmptyInputError("matrix input is empty");

  CharacterMatrix matrix;
  if (lines.front().front() == '>') {
    for (const auto& line : lines) {
      if (line.front() == '>') {
        matrix.taxa.push_back(line.substr(1));
        matrix.rows.emplace_back();
      } else {
        for (char c : line)
          if (!std::isspace(static_cast<unsigned char>(c))) matrix.rows.back().push_back(c);
      }
    }
  } else {
    std::istringstream header(lines.front());
    std::size_t m = 0, n = 0;
    if (!(header >> m >> n)) throw ParseError("expected '<taxa> <sites>' header", 1);
    if (lines.size() - 1 != m)
      throw ParseError("header announces " + std::to_string(m) + " taxa, found " + std::to_string(lines.size() - 1), 1);
    for (std::size_t i = 1; i < lines.size(); ++i) {
      std::istringstream row(lines[i]);
      std::string name, seq;
      if (!(row >> name >> seq)) throw ParseError("expected '<name> <row>'", i + 1);
      if (seq.size() != n) throw ParseError("row width " + std::to_string(seq.size()) + " differs from header", i + 1);
      matrix.taxa.push_back(std::move(name));
      matrix.rows.push_back(std::move(seq));
    }
  }
  matrix.validate();
  return matrix;
}

}  // namespace relate
