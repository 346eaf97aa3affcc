#!/usr/bin/env python3
import sys, time

sys.stdin.read()
time.sleep(30)
