// Geodesic math, the geo-score, hierarchical place-label metrics and
// normalization helpers. Everything here is a pure function over value
// types and safe for unrestricted concurrent use.
#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace geoaot {

// Mean Earth radius. The haversine constant; configurable at call sites
// that need a different sphere.
inline constexpr double kEarthRadiusKm = 6371.0;

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

// Wraps an angle to [0, 360).
inline double wrap_deg_360(double deg) {
    double w = std::fmod(deg, 360.0);
    if (w < 0.0) w += 360.0;
    if (w >= 360.0) w = 0.0;  // fmod can round up to 360 exactly
    return w;
}

// Wraps a longitude to [-180, 180).
inline double wrap_lon(double lon) {
    if (lon >= -180.0 && lon < 180.0) return lon;  // keep canonical values bit-exact
    double w = std::fmod(lon + 180.0, 360.0);
    if (w < 0.0) w += 360.0;
    return w - 180.0;
}

// Smallest absolute difference between two headings, in [0, 180].
inline double angular_diff_deg(double a, double b) {
    double d = std::fabs(wrap_deg_360(a) - wrap_deg_360(b));
    return d > 180.0 ? 360.0 - d : d;
}

// A WGS-84 coordinate pair. Latitude is validated, longitude is
// canonicalized to [-180, 180) on construction.
struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;

    GeoPoint() = default;
    GeoPoint(double lat_deg, double lon_deg) : lat(lat_deg), lon(wrap_lon(lon_deg)) {
        if (!(lat_deg >= -90.0 && lat_deg <= 90.0))
            throw std::invalid_argument("GeoPoint: latitude out of [-90, 90]: " +
                                        std::to_string(lat_deg));
    }

    friend bool operator==(const GeoPoint& a, const GeoPoint& b) {
        return a.lat == b.lat && a.lon == b.lon;
    }
    friend bool operator!=(const GeoPoint& a, const GeoPoint& b) { return !(a == b); }
};

// Great-circle distance on the mean-radius sphere, in kilometers.
// Symmetric, non-negative, at most pi*R. The central-angle argument is
// clamped to [0, 1] so antipodal-adjacent inputs stay in asin's domain.
inline double haversine_km(const GeoPoint& a, const GeoPoint& b,
                           double radius_km = kEarthRadiusKm) {
    const double phi1 = deg2rad(a.lat), phi2 = deg2rad(b.lat);
    const double dphi = deg2rad(b.lat - a.lat);
    const double dlambda = deg2rad(wrap_lon(b.lon - a.lon));
    const double s1 = std::sin(dphi / 2.0), s2 = std::sin(dlambda / 2.0);
    double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
    h = std::clamp(h, 0.0, 1.0);
    return 2.0 * radius_km * std::asin(std::sqrt(h));
}

// Initial great-circle bearing from a to b, degrees clockwise from north
// in [0, 360). Coincident points have no bearing.
inline double bearing_deg(const GeoPoint& a, const GeoPoint& b) {
    if (a == b) throw std::domain_error("bearing_deg: coincident points");
    const double phi1 = deg2rad(a.lat), phi2 = deg2rad(b.lat);
    const double dlambda = deg2rad(wrap_lon(b.lon - a.lon));
    const double y = std::sin(dlambda) * std::cos(phi2);
    const double x = std::cos(phi1) * std::sin(phi2) -
                     std::sin(phi1) * std::cos(phi2) * std::cos(dlambda);
    return wrap_deg_360(rad2deg(std::atan2(y, x)));
}

// Distance-to-score mapping: 100 * exp(-10 x / 18050), x in kilometers.
// Strictly decreasing, score(0) = 100, always positive.
inline double geo_score(double distance_km) {
    if (distance_km < 0.0)
        throw std::domain_error("geo_score: negative distance");
    return 100.0 * std::exp(-10.0 * distance_km / 18050.0);
}

struct ScoreAggregate {
    double mean_distance_km = 0.0;
    double mean_score = 0.0;  // mean of per-sample scores, not score of mean
};

// Per-sample averaging: the score column is the mean of geo_score over
// samples. Convexity of exp makes mean_score >= geo_score(mean_distance).
inline ScoreAggregate aggregate_scores(const std::vector<double>& distances_km) {
    if (distances_km.empty())
        throw std::invalid_argument("aggregate_scores: empty sample set");
    double dist_sum = 0.0, score_sum = 0.0;
    for (double d : distances_km) {
        dist_sum += d;
        score_sum += geo_score(d);
    }
    const double n = static_cast<double>(distances_km.size());
    return {dist_sum / n, score_sum / n};
}

// ---------------------------------------------------------------------------
// Place labels

enum class Continent : std::uint8_t { Africa, Asia, Europe, NorthAmerica, Oceania, SouthAmerica };

inline const char* continent_code(Continent c) {
    switch (c) {
        case Continent::Africa: return "AF";
        case Continent::Asia: return "AS";
        case Continent::Europe: return "EU";
        case Continent::NorthAmerica: return "NA";
        case Continent::Oceania: return "OC";
        case Continent::SouthAmerica: return "SA";
    }
    return "??";
}

inline std::optional<Continent> parse_continent(std::string_view code) {
    std::string up;
    up.reserve(code.size());
    for (char ch : code) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
    if (up == "AF") return Continent::Africa;
    if (up == "AS") return Continent::Asia;
    if (up == "EU") return Continent::Europe;
    if (up == "NA") return Continent::NorthAmerica;
    if (up == "OC") return Continent::Oceania;
    if (up == "SA") return Continent::SouthAmerica;
    return std::nullopt;
}

namespace detail {

// Latin-1 supplement / Latin Extended-A codepoints folded to ASCII.
// Anything not in the table passes through unchanged, so folding is
// deterministic for every input.
inline const std::unordered_map<std::uint32_t, const char*>& diacritic_fold_table() {
    static const std::unordered_map<std::uint32_t, const char*> table = {
        {0xC0, "a"}, {0xC1, "a"}, {0xC2, "a"}, {0xC3, "a"}, {0xC4, "a"}, {0xC5, "a"},
        {0xC6, "ae"}, {0xC7, "c"}, {0xC8, "e"}, {0xC9, "e"}, {0xCA, "e"}, {0xCB, "e"},
        {0xCC, "i"}, {0xCD, "i"}, {0xCE, "i"}, {0xCF, "i"}, {0xD0, "d"}, {0xD1, "n"},
        {0xD2, "o"}, {0xD3, "o"}, {0xD4, "o"}, {0xD5, "o"}, {0xD6, "o"}, {0xD8, "o"},
        {0xD9, "u"}, {0xDA, "u"}, {0xDB, "u"}, {0xDC, "u"}, {0xDD, "y"}, {0xDE, "th"},
        {0xDF, "ss"},
        {0xE0, "a"}, {0xE1, "a"}, {0xE2, "a"}, {0xE3, "a"}, {0xE4, "a"}, {0xE5, "a"},
        {0xE6, "ae"}, {0xE7, "c"}, {0xE8, "e"}, {0xE9, "e"}, {0xEA, "e"}, {0xEB, "e"},
        {0xEC, "i"}, {0xED, "i"}, {0xEE, "i"}, {0xEF, "i"}, {0xF0, "d"}, {0xF1, "n"},
        {0xF2, "o"}, {0xF3, "o"}, {0xF4, "o"}, {0xF5, "o"}, {0xF6, "o"}, {0xF8, "o"},
        {0xF9, "u"}, {0xFA, "u"}, {0xFB, "u"}, {0xFC, "u"}, {0xFD, "y"}, {0xFE, "th"},
        {0xFF, "y"},
        {0x100, "a"}, {0x101, "a"}, {0x102, "a"}, {0x103, "a"}, {0x104, "a"}, {0x105, "a"},
        {0x106, "c"}, {0x107, "c"}, {0x108, "c"}, {0x109, "c"}, {0x10A, "c"}, {0x10B, "c"},
        {0x10C, "c"}, {0x10D, "c"}, {0x10E, "d"}, {0x10F, "d"}, {0x110, "d"}, {0x111, "d"},
        {0x112, "e"}, {0x113, "e"}, {0x114, "e"}, {0x115, "e"}, {0x116, "e"}, {0x117, "e"},
        {0x118, "e"}, {0x119, "e"}, {0x11A, "e"}, {0x11B, "e"}, {0x11C, "g"}, {0x11D, "g"},
        {0x11E, "g"}, {0x11F, "g"}, {0x120, "g"}, {0x121, "g"}, {0x122, "g"}, {0x123, "g"},
        {0x124, "h"}, {0x125, "h"}, {0x126, "h"}, {0x127, "h"}, {0x128, "i"}, {0x129, "i"},
        {0x12A, "i"}, {0x12B, "i"}, {0x12C, "i"}, {0x12D, "i"}, {0x12E, "i"}, {0x12F, "i"},
        {0x130, "i"}, {0x131, "i"}, {0x134, "j"}, {0x135, "j"}, {0x136, "k"}, {0x137, "k"},
        {0x139, "l"}, {0x13A, "l"}, {0x13B, "l"}, {0x13C, "l"}, {0x13D, "l"}, {0x13E, "l"},
        {0x141, "l"}, {0x142, "l"}, {0x143, "n"}, {0x144, "n"}, {0x145, "n"}, {0x146, "n"},
        {0x147, "n"}, {0x148, "n"}, {0x14C, "o"}, {0x14D, "o"}, {0x14E, "o"}, {0x14F, "o"},
        {0x150, "o"}, {0x151, "o"}, {0x152, "oe"}, {0x153, "oe"}, {0x154, "r"}, {0x155, "r"},
        {0x156, "r"}, {0x157, "r"}, {0x158, "r"}, {0x159, "r"}, {0x15A, "s"}, {0x15B, "s"},
        {0x15C, "s"}, {0x15D, "s"}, {0x15E, "s"}, {0x15F, "s"}, {0x160, "s"}, {0x161, "s"},
        {0x162, "t"}, {0x163, "t"}, {0x164, "t"}, {0x165, "t"}, {0x166, "t"}, {0x167, "t"},
        {0x168, "u"}, {0x169, "u"}, {0x16A, "u"}, {0x16B, "u"}, {0x16C, "u"}, {0x16D, "u"},
        {0x16E, "u"}, {0x16F, "u"}, {0x170, "u"}, {0x171, "u"}, {0x172, "u"}, {0x173, "u"},
        {0x174, "w"}, {0x175, "w"}, {0x176, "y"}, {0x177, "y"}, {0x178, "y"}, {0x179, "z"},
        {0x17A, "z"}, {0x17B, "z"}, {0x17C, "z"}, {0x17D, "z"}, {0x17E, "z"},
    };
    return table;
}

// Decodes one UTF-8 codepoint starting at i. Returns the codepoint and
// advances i past it; malformed bytes are returned as-is one at a time.
inline std::uint32_t decode_utf8(std::string_view s, std::size_t& i) {
    const auto byte = [&](std::size_t k) { return static_cast<std::uint8_t>(s[k]); };
    const std::uint8_t b0 = byte(i);
    if (b0 < 0x80) { i += 1; return b0; }
    auto cont = [&](std::size_t k) { return k < s.size() && (byte(k) & 0xC0) == 0x80; };
    if ((b0 & 0xE0) == 0xC0 && cont(i + 1)) {
        std::uint32_t cp = (std::uint32_t(b0 & 0x1F) << 6) | (byte(i + 1) & 0x3F);
        i += 2;
        return cp;
    }
    if ((b0 & 0xF0) == 0xE0 && cont(i + 1) && cont(i + 2)) {
        std::uint32_t cp = (std::uint32_t(b0 & 0x0F) << 12) |
                           (std::uint32_t(byte(i + 1) & 0x3F) << 6) | (byte(i + 2) & 0x3F);
        i += 3;
        return cp;
    }
    if ((b0 & 0xF8) == 0xF0 && cont(i + 1) && cont(i + 2) && cont(i + 3)) {
        std::uint32_t cp = (std::uint32_t(b0 & 0x07) << 18) |
                           (std::uint32_t(byte(i + 1) & 0x3F) << 12) |
                           (std::uint32_t(byte(i + 2) & 0x3F) << 6) | (byte(i + 3) & 0x3F);
        i += 4;
        return cp;
    }
    i += 1;
    return b0;  // malformed, pass through
}

inline void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

}  // namespace detail

// Canonical label form: lowercase, diacritics folded to ASCII, leading and
// trailing whitespace trimmed, interior whitespace runs collapsed to one
// space. Deterministic for any input byte sequence.
inline std::string normalize_label(std::string_view raw) {
    std::string folded;
    folded.reserve(raw.size());
    std::size_t i = 0;
    const auto& table = detail::diacritic_fold_table();
    while (i < raw.size()) {
        std::uint32_t cp = detail::decode_utf8(raw, i);
        if (auto it = table.find(cp); it != table.end()) {
            folded += it->second;
        } else if (cp < 0x80) {
            folded.push_back(
                static_cast<char>(std::tolower(static_cast<unsigned char>(cp))));
        } else {
            detail::append_utf8(folded, cp);
        }
    }
    std::string out;
    out.reserve(folded.size());
    bool in_space = false;
    for (char ch : folded) {
        const bool ws = std::isspace(static_cast<unsigned char>(ch)) != 0;
        if (ws) {
            in_space = true;
            continue;
        }
        if (in_space && !out.empty()) out.push_back(' ');
        in_space = false;
        out.push_back(ch);
    }
    return out;
}

// Hierarchical place labels, stored in normalized form. Country is
// mandatory; street and city may be absent.
struct PlaceLabels {
    std::optional<std::string> street;
    std::optional<std::string> city;
    std::string country;
    Continent continent = Continent::Europe;

    static PlaceLabels make(std::optional<std::string_view> street,
                            std::optional<std::string_view> city,
                            std::string_view country, Continent continent) {
        PlaceLabels l;
        if (street) l.street = normalize_label(*street);
        if (city) l.city = normalize_label(*city);
        l.country = normalize_label(country);
        if (l.country.empty())
            throw std::invalid_argument("PlaceLabels: country must be non-empty");
        l.continent = continent;
        return l;
    }

    friend bool operator==(const PlaceLabels& a, const PlaceLabels& b) {
        return a.street == b.street && a.city == b.city && a.country == b.country &&
               a.continent == b.continent;
    }
};

enum class LabelLevel { Street, City, Country };

inline const char* level_name(LabelLevel l) {
    switch (l) {
        case LabelLevel::Street: return "street";
        case LabelLevel::City: return "city";
        case LabelLevel::Country: return "country";
    }
    return "?";
}

inline std::optional<std::string> label_at(const PlaceLabels& l, LabelLevel level) {
    switch (level) {
        case LabelLevel::Street: return l.street;
        case LabelLevel::City: return l.city;
        case LabelLevel::Country: return l.country;
    }
    return std::nullopt;
}

// accuracy is the micro fraction of exact matches; recall and f1 are macro
// averages over the distinct ground-truth classes at the level.
struct LevelMetrics {
    double accuracy = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Both averaging conventions, since either may be wanted downstream.
struct LevelMetricsDetail {
    LevelMetrics primary;       // micro accuracy, macro recall, macro f1
    double macro_precision = 0.0;
    double micro_precision = 0.0;  // over samples with a prediction present
    double micro_recall = 0.0;     // == accuracy for single-label samples
    double micro_f1 = 0.0;
};

// Exact normalized-label classification at one hierarchy level. An absent
// prediction counts as a mismatch; truth labels must be present.
inline LevelMetricsDetail level_metrics_detail(const std::vector<PlaceLabels>& pred,
                                               const std::vector<PlaceLabels>& truth,
                                               LabelLevel level) {
    if (pred.size() != truth.size())
        throw std::invalid_argument("level_metrics: pred/truth length mismatch");
    if (truth.empty()) throw std::invalid_argument("level_metrics: empty sample set");

    struct ClassCounts {
        std::size_t tp = 0, truth_n = 0, pred_n = 0;
    };
    std::unordered_map<std::string, ClassCounts> per_class;
    std::size_t match = 0, predicted = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        auto t = label_at(truth[i], level);
        if (!t || t->empty())
            throw std::invalid_argument(std::string("level_metrics: truth label missing at level ") +
                                        level_name(level));
        auto p = label_at(pred[i], level);
        per_class[*t].truth_n++;
        if (p && !p->empty()) {
            predicted++;
            per_class[*p].pred_n++;
            if (*p == *t) {
                match++;
                per_class[*t].tp++;
            }
        }
    }

    double rec_sum = 0.0, prec_sum = 0.0, f1_sum = 0.0;
    std::size_t n_classes = 0;
    for (const auto& [label, c] : per_class) {
        if (c.truth_n == 0) continue;  // predicted-only classes don't define recall
        n_classes++;
        const double rec = static_cast<double>(c.tp) / static_cast<double>(c.truth_n);
        const double prec =
            c.pred_n == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.pred_n);
        rec_sum += rec;
        prec_sum += prec;
        f1_sum += (prec + rec) > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
    }

    LevelMetricsDetail d;
    const double n = static_cast<double>(truth.size());
    d.primary.accuracy = static_cast<double>(match) / n;
    d.primary.recall = rec_sum / static_cast<double>(n_classes);
    d.primary.f1 = f1_sum / static_cast<double>(n_classes);
    d.macro_precision = prec_sum / static_cast<double>(n_classes);
    d.micro_recall = d.primary.accuracy;
    d.micro_precision =
        predicted == 0 ? 0.0 : static_cast<double>(match) / static_cast<double>(predicted);
    d.micro_f1 = (d.micro_precision + d.micro_recall) > 0.0
                     ? 2.0 * d.micro_precision * d.micro_recall /
                           (d.micro_precision + d.micro_recall)
                     : 0.0;
    return d;
}

inline LevelMetrics level_metrics(const std::vector<PlaceLabels>& pred,
                                  const std::vector<PlaceLabels>& truth, LabelLevel level) {
    return level_metrics_detail(pred, truth, level).primary;
}

// Affine [min, max] -> [0, 1] rescaling. A constant list maps to all
// zeros: any constant carries no ordering information.
inline std::vector<double> minmax_normalize(const std::vector<double>& values) {
    if (values.empty())
        throw std::invalid_argument("minmax_normalize: empty input");
    const auto [mn_it, mx_it] = std::minmax_element(values.begin(), values.end());
    const double mn = *mn_it, mx = *mx_it;
    std::vector<double> out(values.size(), 0.0);
    if (mx > mn) {
        const double span = mx - mn;
        for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - mn) / span;
    }
    return out;
}

}  // namespace geoaot
