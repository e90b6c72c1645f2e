# GLN Tracking Package
