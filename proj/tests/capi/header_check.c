/* Compiled as C so that the public header stays valid C. */
#include "tcfaudit/tcfaudit.h"

int tcfa_header_check_decode_cmp(const char* raw) {
  tcfa_consent* consent = NULL;
  int cmp = -1;
  if (tcfa_consent_decode(raw, &consent) == TCFA_OK) {
    cmp = tcfa_consent_cmp_id(consent);
  }
  tcfa_consent_free(consent);
  return cmp;
}
