// Regenerates consent_vectors.json with the IAB reference SDK
// (npm package "consent-string") as an independent encoder/decoder.
//
//   npm install consent-string
//   node gen_consent_vectors.js > consent_vectors.json
'use strict';
const { encodeToBase64 } = require('consent-string/dist/utils/bits');
const { decodeConsentString } = require('consent-string/dist/decode');

function mulberry32(a) {
  return function () {
    a |= 0; a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}
const rnd = mulberry32(20191001);
const randInt = (lo, hi) => lo + Math.floor(rnd() * (hi - lo + 1));

function bits(n, isSet) {
  let s = '';
  for (let i = 1; i <= n; i += 1) s += isSet(i) ? '1' : '0';
  return s;
}

function base(over) {
  return Object.assign({
    version: 1,
    created: 15433394542,
    lastUpdated: 15433394542,
    cmpId: 139,
    cmpVersion: 1,
    consentScreen: 1,
    consentLanguage: 'EN',
    vendorListVersion: 122,
    purposeIdBitString: bits(24, () => false),
    maxVendorId: 0,
    isRange: false,
    vendorIdBitString: '',
  }, over);
}

const vectors = [];
function push(label, raw) {
  const d = decodeConsentString(raw);
  vectors.push({
    label,
    raw,
    version: d.version,
    created: Math.round(d.created.getTime() / 100),
    last_updated: Math.round(d.lastUpdated.getTime() / 100),
    cmp_id: d.cmpId,
    cmp_version: d.cmpVersion,
    consent_screen: d.consentScreen,
    consent_language: d.consentLanguage,
    vendor_list_version: d.vendorListVersion,
    max_vendor_id: d.maxVendorId,
    allowed_purposes: d.allowedPurposeIds,
    allowed_vendors: d.allowedVendorIds,
  });
}

push('fig3-telerama', 'BOX5uluOX5uluCLAAAENB6-AAAAizAAA');
push('empty', encodeToBase64(base({ cmpVersion: 0, consentScreen: 0 })));
push('range-default-1-exclude-10-20', encodeToBase64(base({
  maxVendorId: 30,
  isRange: true,
  defaultConsent: true,
  numEntries: 1,
  vendorRangeList: [{ isRange: true, startVendorId: 10, endVendorId: 20 }],
})));
push('purpose-1-only', encodeToBase64(base({ purposeIdBitString: bits(24, (i) => i === 1) })));
push('purpose-24-only', encodeToBase64(base({ purposeIdBitString: bits(24, (i) => i === 24) })));
push('all-24-purposes', encodeToBase64(base({ purposeIdBitString: bits(24, () => true) })));
push('cmp-4095-vendors-to-2000', encodeToBase64(base({
  cmpId: 4095,
  purposeIdBitString: bits(24, (i) => i <= 5),
  maxVendorId: 2000,
  isRange: true,
  defaultConsent: false,
  numEntries: 1,
  vendorRangeList: [{ isRange: true, startVendorId: 1, endVendorId: 2000 }],
})));

for (let n = 0; n < 60; n += 1) {
  const maxVendorId = randInt(0, 700);
  const density = rnd();
  const allowed = new Set();
  for (let v = 1; v <= maxVendorId; v += 1) if (rnd() < density) allowed.add(v);
  const fields = {
    created: randInt(15000000000, 16000000000),
    lastUpdated: randInt(15000000000, 16000000000),
    cmpId: randInt(0, 4095),
    cmpVersion: randInt(0, 4095),
    consentScreen: randInt(0, 63),
    consentLanguage: String.fromCharCode(65 + randInt(0, 25), 65 + randInt(0, 25)),
    vendorListVersion: randInt(1, 4095),
    purposeIdBitString: bits(24, () => rnd() < 0.4),
    maxVendorId,
  };
  if (n % 2 === 0) {
    fields.isRange = false;
    fields.vendorIdBitString = bits(maxVendorId, (i) => allowed.has(i));
  } else {
    const defaultConsent = rnd() < 0.5;
    const entries = [];
    let v = 1;
    while (v <= maxVendorId) {
      const exception = defaultConsent ? !allowed.has(v) : allowed.has(v);
      if (!exception) { v += 1; continue; }
      let end = v;
      while (end + 1 <= maxVendorId
             && (defaultConsent ? !allowed.has(end + 1) : allowed.has(end + 1))) end += 1;
      entries.push(end === v ? { isRange: false, startVendorId: v }
                             : { isRange: true, startVendorId: v, endVendorId: end });
      v = end + 1;
    }
    Object.assign(fields, {
      isRange: true, defaultConsent, numEntries: entries.length, vendorRangeList: entries,
    });
  }
  push(`random-${n}`, encodeToBase64(base(fields)));
}

process.stdout.write(JSON.stringify({ generator: 'consent-string@' +
  require('consent-string/package.json').version, vectors }, null, 1) + '\n');
