/**
 * Tokenization and stemming, mirroring the retrieval side so that phrase
 * matching (dedup, F1) agrees across the two packages: lowercase, split on
 * whitespace/punctuation (letters and digits only), Porter-stem.
 */

const TOKEN_RE = /[\p{L}\p{N}]+/gu;

export function tokenize(text: string): string[] {
  return text.toLowerCase().match(TOKEN_RE) ?? [];
}

/** Stemmed, space-joined normal form used for phrase equality. */
export function normalizePhrase(phrase: string): string {
  return tokenize(phrase).map(stem).join(" ");
}

// ---------------------------------------------------------------------------
// Porter stemmer (classic formulation; same behavior as the Python primary).
// ---------------------------------------------------------------------------

const VOWELS = "aeiou";

function isConsonant(word: string, i: number): boolean {
  const ch = word[i];
  if (VOWELS.includes(ch)) return false;
  if (ch === "y") return i === 0 || !isConsonant(word, i - 1);
  return true;
}

function measure(stemPart: string): number {
  let m = 0;
  let prev: boolean | null = null;
  for (let i = 0; i < stemPart.length; i++) {
    const cons = isConsonant(stemPart, i);
    if (prev === false && cons) m++;
    prev = cons;
  }
  return m;
}

function containsVowel(stemPart: string): boolean {
  for (let i = 0; i < stemPart.length; i++) {
    if (!isConsonant(stemPart, i)) return true;
  }
  return false;
}

function endsDoubleConsonant(word: string): boolean {
  const n = word.length;
  return n >= 2 && word[n - 1] === word[n - 2] && isConsonant(word, n - 1);
}

function endsCvc(word: string): boolean {
  const n = word.length;
  if (n < 3) return false;
  return (
    isConsonant(word, n - 3) &&
    !isConsonant(word, n - 2) &&
    isConsonant(word, n - 1) &&
    !"wxy".includes(word[n - 1])
  );
}

const STEP2: Array<[string, string]> = [
  ["ational", "ate"], ["ization", "ize"], ["iveness", "ive"],
  ["fulness", "ful"], ["ousness", "ous"], ["tional", "tion"],
  ["biliti", "ble"], ["entli", "ent"], ["ousli", "ous"], ["ation", "ate"],
  ["alism", "al"], ["aliti", "al"], ["iviti", "ive"], ["enci", "ence"],
  ["anci", "ance"], ["izer", "ize"], ["abli", "able"], ["alli", "al"],
  ["ator", "ate"], ["eli", "e"],
];

const STEP3: Array<[string, string]> = [
  ["icate", "ic"], ["ative", ""], ["alize", "al"], ["iciti", "ic"],
  ["ical", "ic"], ["ness", ""], ["ful", ""],
];

const STEP4 = [
  "ement", "ance", "ence", "able", "ible", "ment", "ant", "ent", "ion",
  "ism", "ate", "iti", "ous", "ive", "ize", "al", "er", "ic", "ou",
];

function applyRules(word: string, rules: Array<[string, string]>): string {
  for (const [suffix, replacement] of rules) {
    if (word.endsWith(suffix)) {
      const stemPart = word.slice(0, -suffix.length);
      return measure(stemPart) > 0 ? stemPart + replacement : word;
    }
  }
  return word;
}

export function stem(word: string): string {
  if (word.length <= 2) return word;
  let w = word;
  // step 1a
  if (w.endsWith("sses")) w = w.slice(0, -2);
  else if (w.endsWith("ies")) w = w.slice(0, -2);
  else if (w.endsWith("ss")) { /* unchanged */ }
  else if (w.endsWith("s")) w = w.slice(0, -1);
  // step 1b
  if (w.endsWith("eed")) {
    if (measure(w.slice(0, -3)) > 0) w = w.slice(0, -1);
  } else {
    let stripped: string | null = null;
    if (w.endsWith("ed") && containsVowel(w.slice(0, -2))) stripped = w.slice(0, -2);
    else if (w.endsWith("ing") && containsVowel(w.slice(0, -3))) stripped = w.slice(0, -3);
    if (stripped !== null) {
      w = stripped;
      if (w.endsWith("at") || w.endsWith("bl") || w.endsWith("iz")) w += "e";
      else if (endsDoubleConsonant(w) && !"lsz".includes(w[w.length - 1])) w = w.slice(0, -1);
      else if (measure(w) === 1 && endsCvc(w)) w += "e";
    }
  }
  // step 1c
  if (w.endsWith("y") && containsVowel(w.slice(0, -1))) w = w.slice(0, -1) + "i";
  w = applyRules(w, STEP2);
  w = applyRules(w, STEP3);
  // step 4
  for (const suffix of STEP4) {
    if (w.endsWith(suffix)) {
      const stemPart = w.slice(0, -suffix.length);
      if (measure(stemPart) > 1) {
        if (suffix === "ion" && !(stemPart.endsWith("s") || stemPart.endsWith("t"))) break;
        w = stemPart;
      }
      break;
    }
  }
  // step 5a
  if (w.endsWith("e")) {
    const stemPart = w.slice(0, -1);
    const m = measure(stemPart);
    if (m > 1 || (m === 1 && !endsCvc(stemPart))) w = stemPart;
  }
  // step 5b
  if (measure(w) > 1 && endsDoubleConsonant(w) && w.endsWith("l")) w = w.slice(0, -1);
  return w;
}
