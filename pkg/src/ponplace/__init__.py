"""Power-minimizing VM placement over a WDM-TDM AWGR PON data-centre cell."""
