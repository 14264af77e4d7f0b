#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "roughvol/exact_law.hpp"
#include "roughvol/function_spec.hpp"
#include "roughvol/gaussian_moment.hpp"
#include "roughvol/moments.hpp"

namespace roughvol {

enum class Letter : char { I = 'I', J = 'J', K = 'K' };

struct Word {
    std::vector<Letter> letters;

    static Word parse(std::string_view text);

    int length() const { return static_cast<int>(letters.size()); }
    // l(I) = l(K) = 1, l(J) = 2
    int weight() const;
    int count(Letter c) const;
    std::string to_string() const;

    bool operator==(const Word&) const = default;
};

// All words of the given weight, shortest first, then lexicographic in I < J < K.
std::vector<Word> enumerate_words(int weight);
// Those whose last letter is not I.
std::vector<Word> contributing_words(int weight);

// 2^{-#J} rho^{#I} l(w)!
double word_constant(const Word& w, double rho);

// Closed form of the iterated operator applied to 1 for f(x) = x. Coordinates
// c = 0..m-1 hold times r_0 > r_1 > ... (the last letter sits at c = 0). Each
// pairing lists, for every coordinate, the earlier coordinate whose Malliavin
// derivative it carries (-1 for J and K coordinates), together with the
// polynomial multiplying the product of those derivatives.
struct WordPairing {
    std::vector<int> target;
    MultiPolynomial poly;
};

struct WordTerm {
    Word word;
    double constant = 0.0;
    std::vector<WordPairing> pairings;
};

// b must be a polynomial of degree <= 2.
WordTerm expand_word(const Word& w, double rho, const FunctionSpec& b);

struct WordOptions {
    // nested rule per level for the exact branch, indexed by word length - 1
    std::vector<int> points = {24, 24, 8, 6};
    std::vector<int> levels_right = {16, 16, 5, 3};
    std::vector<int> levels_left = {8, 8, 1, 1};
};

// Contribution of one word to E[L_T^N], N = weight of the word.
double word_contribution(const Word& w, const ModelParams& p, const FunctionSpec& b, const Branch& which,
                         const WordOptions& opt = {});

// E[L_T^N] (exact model) or E[L^n_T^N] (scheme) for f(x) = x, L0 = 0 and b a
// polynomial of degree <= 2, N = 1..4.
double moment_via_words(int N, const ModelParams& p, const FunctionSpec& b, const Branch& which,
                        const WordOptions& opt = {});

}  // namespace roughvol
